#include "ecodiv/records.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ecodiv/error.hpp"
#include "ecodiv/text_format.hpp"

namespace ecodiv {

using nlohmann::json;

namespace {

json support_json(const SupportStats& s) {
  return json{{"recall", s.recall},
              {"precision", s.precision},
              {"order", s.order},
              {"reference_types", s.reference_types},
              {"generated_types", s.generated_types},
              {"shared_types", s.shared_types}};
}

SupportStats support_from(const json& j) {
  SupportStats s;
  s.recall = j.at("recall").get<double>();
  s.precision = j.at("precision").get<double>();
  s.order = j.at("order").get<std::size_t>();
  s.reference_types = j.at("reference_types").get<std::size_t>();
  s.generated_types = j.at("generated_types").get<std::size_t>();
  s.shared_types = j.at("shared_types").get<std::size_t>();
  return s;
}

}  // namespace

std::string record_to_json(const IterationRecord& r) {
  json per_model = json::array();
  for (const auto& m : r.per_model) {
    per_model.push_back(json{{"mean_perplexity", m.mean_perplexity},
                             {"order", m.order},
                             {"alpha", m.alpha},
                             {"validation_perplexity", m.validation_perplexity},
                             {"support", m.support ? support_json(*m.support) : json(nullptr)}});
  }
  const auto& d = r.distribution.summary;
  json j{{"t", r.t},
         {"models", r.models},
         {"diversity", r.diversity},
         {"ecosystem_mean", r.ecosystem_mean},
         {"per_model", per_model},
         {"pooled_support", r.pooled_support ? support_json(*r.pooled_support) : json(nullptr)},
         {"distribution",
          json{{"count", d.count},
               {"mean", d.mean},
               {"std", d.std},
               {"q1", d.q1},
               {"median", d.median},
               {"q3", d.q3},
               {"iqr", d.iqr},
               {"samples", r.distribution.samples}}},
         {"duration_seconds", r.duration_seconds}};
  return j.dump();
}

IterationRecord record_from_json(const std::string& line) {
  IterationRecord r;
  try {
    const json j = json::parse(line);
    r.t = j.at("t").get<long>();
    r.models = j.at("models").get<std::size_t>();
    r.diversity = j.at("diversity").get<double>();
    r.ecosystem_mean = j.at("ecosystem_mean").get<double>();
    for (const auto& m : j.at("per_model")) {
      ModelRecord mr;
      mr.mean_perplexity = m.at("mean_perplexity").get<double>();
      mr.order = m.at("order").get<int>();
      mr.alpha = m.at("alpha").get<double>();
      mr.validation_perplexity = m.at("validation_perplexity").get<double>();
      if (!m.at("support").is_null()) mr.support = support_from(m.at("support"));
      r.per_model.push_back(mr);
    }
    if (!j.at("pooled_support").is_null()) r.pooled_support = support_from(j.at("pooled_support"));
    const auto& d = j.at("distribution");
    auto& s = r.distribution.summary;
    s.count = d.at("count").get<std::size_t>();
    s.mean = d.at("mean").get<double>();
    s.std = d.at("std").get<double>();
    s.q1 = d.at("q1").get<double>();
    s.median = d.at("median").get<double>();
    s.q3 = d.at("q3").get<double>();
    s.iqr = d.at("iqr").get<double>();
    r.distribution.samples = d.at("samples").get<std::vector<double>>();
    r.distribution.hist = histogram(r.distribution.samples);
    r.duration_seconds = j.at("duration_seconds").get<double>();
  } catch (const json::exception& e) {
    throw Error(Errc::kFormat, e.what());
  }
  if (r.per_model.empty()) throw Error(Errc::kFormat, "record has no per-model entries");
  return r;
}

std::string histogram_to_json(long t, const Histogram& hist) {
  return json{{"t", t}, {"edges", hist.edges}, {"counts", hist.counts}}.dump();
}

std::vector<IterationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::vector<IterationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw Error(Errc::kFormat, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string summary_csv(const std::vector<IterationRecord>& records) {
  std::string out;
  out += kSummaryHeader;
  out += '\n';
  out += kSummaryColumns;
  out += '\n';
  for (const auto& r : records) {
    std::string mu_m;
    for (const auto& m : r.per_model) {
      if (!mu_m.empty()) mu_m += ';';
      mu_m += format_double(m.mean_perplexity);
    }
    out += std::to_string(r.t) + ',' + std::to_string(r.models) + ',' + format_double(r.diversity) + ',' +
           format_double(r.ecosystem_mean) + ',' + mu_m + ',';
    if (r.pooled_support) {
      out += format_double(r.pooled_support->recall) + ',' + format_double(r.pooled_support->precision);
    } else {
      out += ',';
    }
    out += ',' + format_double(r.distribution.summary.iqr) + ',' + format_double(r.distribution.summary.std) + '\n';
  }
  return out;
}

void write_shard_file(const std::filesystem::path& path, const Shard& shard, const ShardFileHeader& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << header.vocab_fingerprint;
  out << "# ecodiv-shard v1 vocab=" << hex.str() << " model=" << header.model << " t=" << header.t
      << " blocks=" << shard.size() << '\n';
  for (const auto& seq : shard.sequences) {
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (i) out << ' ';
      out << seq.ids[i];
    }
    out << '\n';
  }
}

Shard read_shard_file(const std::filesystem::path& path, ShardFileHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kFormat, path.string() + ": empty shard file");
  std::istringstream head(line);
  std::string hash, magic, version;
  head >> hash >> magic >> version;
  if (hash != "#" || magic != "ecodiv-shard" || version != "v1") {
    throw Error(Errc::kFormat, path.string() + ":1: not an ecodiv-shard v1 file");
  }
  ShardFileHeader h;
  std::size_t blocks = 0;
  for (std::string field; head >> field;) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Error(Errc::kFormat, path.string() + ":1: bad header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "vocab") {
      h.vocab_fingerprint = std::stoull(value, nullptr, 16);
    } else if (key == "model") {
      h.model = parse_int<std::size_t>(value);
    } else if (key == "t") {
      h.t = parse_int<long>(value);
    } else if (key == "blocks") {
      blocks = parse_int<std::size_t>(value);
    }
  }
  Shard shard;
  shard.owner = h.model;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    TokenSequence seq;
    std::istringstream row(line);
    for (std::string tok; row >> tok;) {
      try {
        seq.ids.push_back(parse_int<TokenId>(tok));
      } catch (const Error&) {
        throw Error(Errc::kFormat, path.string() + ":" + std::to_string(line_no) + ": bad token id '" + tok + "'");
      }
    }
    shard.sequences.push_back(std::move(seq));
  }
  if (shard.size() != blocks) throw Error(Errc::kFormat, path.string() + ": header says " + std::to_string(blocks) + " blocks");
  if (header != nullptr) *header = h;
  return shard;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

}  // namespace ecodiv
