#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecodiv {

enum class Errc {
  kEmptyCorpus,
  kInsufficientTokens,
  kDegenerateSplit,
  kEmptyTrainingData,
  kOracleTooLarge,
  kDomain,
  kConfig,
  kInvalidArgument,
  kIo,
  kFormat,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can tell "empty corpus" from "degenerate split".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kEmptyCorpus: return "empty corpus";
    case Errc::kInsufficientTokens: return "insufficient tokens";
    case Errc::kDegenerateSplit: return "degenerate split";
    case Errc::kEmptyTrainingData: return "empty training data";
    case Errc::kOracleTooLarge: return "oracle too large";
    case Errc::kDomain: return "domain error";
    case Errc::kConfig: return "config error";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kIo: return "io error";
    case Errc::kFormat: return "format error";
  }
  return "unknown error";
}

}  // namespace ecodiv
