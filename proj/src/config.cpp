#include "ecodiv/config.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "ecodiv/error.hpp"
#include "ecodiv/text_format.hpp"

namespace ecodiv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!item.empty()) out.push_back(std::move(item));
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(std::move(item));
  return out;
}

std::string join(const auto& items, const auto& fmt) {
  std::string out;
  for (const auto& x : items) {
    if (!out.empty()) out += ' ';
    out += fmt(x);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

class Reader {
 public:
  Reader(const IniDocument& doc, std::filesystem::path base) : doc_(doc), base_(std::move(base)) {}

  template <typename Fn>
  void with(const std::string& section, const std::string& key, Fn&& apply) {
    seen_.insert({section, key});
    const auto* v = doc_.find(section, key);
    if (v == nullptr) return;
    try {
      apply(v->text);
    } catch (const Error& e) {
      doc_.fail(v->line, "[" + section + "] " + key + ": " + e.what());
    }
  }

  void size(const std::string& s, const std::string& k, std::size_t& out) {
    with(s, k, [&](const std::string& v) { out = parse_int<std::size_t>(v); });
  }
  void u64(const std::string& s, const std::string& k, std::uint64_t& out) {
    with(s, k, [&](const std::string& v) { out = parse_int<std::uint64_t>(v); });
  }
  void real(const std::string& s, const std::string& k, double& out) {
    with(s, k, [&](const std::string& v) { out = parse_double(v); });
  }
  void flag(const std::string& s, const std::string& k, bool& out) {
    with(s, k, [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") {
        out = true;
      } else if (v == "false" || v == "0" || v == "no") {
        out = false;
      } else {
        throw Error(Errc::kFormat, "expected true/false, got '" + v + "'");
      }
    });
  }
  void path(const std::string& s, const std::string& k, std::filesystem::path& out) {
    with(s, k, [&](const std::string& v) { out = resolve(base_, v); });
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    for (const auto& key : doc_.keys()) {
      if (!seen_.contains(key)) {
        doc_.fail(doc_.find(key.first, key.second)->line, "unknown key '" + key.second + "' in [" + key.first + "]");
      }
    }
  }

  const IniDocument& doc() const { return doc_; }

  std::filesystem::path resolved(const std::string& p) const { return resolve(base_, p); }

 private:
  const IniDocument& doc_;
  std::filesystem::path base_;
  std::set<std::pair<std::string, std::string>> seen_;
};

RunConfig read_run(Reader& r) {
  RunConfig cfg;
  auto& c = cfg.corpus;
  r.path("corpus", "path", c.path);
  r.path("corpus", "train", c.train);
  r.path("corpus", "valid", c.valid);
  r.path("corpus", "test", c.test);
  r.size("corpus", "min_token_freq", c.min_token_freq);
  r.size("corpus", "max_tokens", c.max_tokens);
  r.with("corpus", "split", [&](const std::string& v) {
    const auto f = words(v);
    if (f.size() != 3) throw Error(Errc::kFormat, "expected three fractions");
    c.split = {parse_double(f[0]), parse_double(f[1]), parse_double(f[2])};
  });

  auto& e = cfg.eco;
  r.size("ecosystem", "models", e.models);
  r.size("ecosystem", "iterations", e.iterations);
  r.u64("ecosystem", "seed", e.seed);
  r.size("ecosystem", "block_size", e.block_size);
  r.size("ecosystem", "beam_width", e.beam_width);
  r.with("ecosystem", "k_grid", [&](const std::string& v) {
    e.grid.orders.clear();
    for (const auto& w : words(v)) e.grid.orders.push_back(parse_int<int>(w));
  });
  r.with("ecosystem", "alpha_grid", [&](const std::string& v) {
    e.grid.alphas.clear();
    for (const auto& w : words(v)) e.grid.alphas.push_back(parse_double(w));
  });
  r.real("ecosystem", "subset_fraction", e.subset_fraction);
  r.with("ecosystem", "refit", [&](const std::string& v) {
    if (v == "fresh") {
      e.refit = RefitMode::kFresh;
    } else if (v == "accumulate") {
      e.refit = RefitMode::kAccumulate;
    } else {
      throw Error(Errc::kFormat, "expected fresh or accumulate, got '" + v + "'");
    }
  });
  r.real("ecosystem", "decay", e.decay);
  r.size("ecosystem", "support_order", e.support_order);
  r.flag("ecosystem", "baseline", e.baseline);
  r.size("ecosystem", "workers", e.workers);

  r.path("output", "out", cfg.output.out);
  if (cfg.output.out.is_relative()) cfg.output.out = r.resolved(cfg.output.out.string());
  r.flag("output", "persist_shards", cfg.output.persist_shards);
  r.flag("output", "persist_models", cfg.output.persist_models);
  return cfg;
}

void check_run(const RunConfig& cfg, const IniDocument& doc) {
  auto line_of = [&](const std::string& s, const std::string& k) {
    const auto* v = doc.find(s, k);
    return v != nullptr ? v->line : 0;
  };
  const auto& c = cfg.corpus;
  if (c.path.empty() && c.train.empty()) doc.fail(0, "[corpus] needs either 'path' or 'train'/'valid'/'test'");
  if (!c.path.empty() && !c.train.empty()) doc.fail(line_of("corpus", "train"), "[corpus] 'path' and 'train' are exclusive");
  if (!c.train.empty() && (c.valid.empty() || c.test.empty())) {
    doc.fail(line_of("corpus", "train"), "[corpus] explicit splits need train, valid and test");
  }
  if (c.min_token_freq < 1) doc.fail(line_of("corpus", "min_token_freq"), "min_token_freq must be >= 1");
  const double sum = c.split.train + c.split.validation + c.split.test;
  if (std::abs(sum - 1.0) > 1e-9) doc.fail(line_of("corpus", "split"), "split fractions must sum to 1");
  try {
    cfg.eco.validate();
  } catch (const Error& e) {
    doc.fail(0, e.what());
  }
}

}  // namespace

IniDocument IniDocument::parse(const std::string& text, std::string source) {
  IniDocument doc;
  doc.source_ = std::move(source);
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') doc.fail(line, "unterminated section header");
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) doc.fail(line, "empty section name");
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) doc.fail(line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    if (key.empty()) doc.fail(line, "missing key");
    if (section.empty()) doc.fail(line, "key '" + key + "' outside of any [section]");
    auto [it, inserted] = doc.values_.try_emplace({section, key}, Value{trim(content.substr(eq + 1)), line});
    if (!inserted) doc.fail(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
    doc.order_.emplace_back(section, key);
  }
  return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

const IniDocument::Value* IniDocument::find(const std::string& section, const std::string& key) const {
  auto it = values_.find({section, key});
  return it == values_.end() ? nullptr : &it->second;
}

void IniDocument::fail(std::size_t line, const std::string& message) const {
  throw Error(Errc::kConfig, source_ + (line ? ":" + std::to_string(line) : std::string()) + ": " + message);
}

bool operator==(const EcosystemConfig& a, const EcosystemConfig& b) {
  return a.models == b.models && a.iterations == b.iterations && a.seed == b.seed && a.block_size == b.block_size &&
         a.beam_width == b.beam_width && a.grid.orders == b.grid.orders && a.grid.alphas == b.grid.alphas &&
         a.refit == b.refit && a.decay == b.decay && a.subset_fraction == b.subset_fraction &&
         a.support_order == b.support_order && a.baseline == b.baseline && a.workers == b.workers;
}

RunConfig parse_run_config(const IniDocument& doc, const std::filesystem::path& base_dir) {
  Reader reader(doc, base_dir);
  auto cfg = read_run(reader);
  reader.finish();
  check_run(cfg, doc);
  return cfg;
}

SweepSpec parse_sweep_spec(const IniDocument& doc, const std::filesystem::path& base_dir) {
  Reader reader(doc, base_dir);
  SweepSpec spec;
  spec.base = read_run(reader);
  reader.with("sweep", "models", [&](const std::string& v) {
    spec.model_counts.clear();
    for (const auto& w : words(v)) spec.model_counts.push_back(parse_int<std::size_t>(w));
  });
  reader.with("sweep", "seeds", [&](const std::string& v) {
    spec.seeds.clear();
    for (const auto& w : words(v)) spec.seeds.push_back(parse_int<std::uint64_t>(w));
  });
  reader.finish();
  check_run(spec.base, doc);
  auto line_of = [&](const std::string& k) {
    const auto* v = doc.find("sweep", k);
    return v != nullptr ? v->line : 0;
  };
  if (spec.model_counts.empty()) doc.fail(line_of("models"), "[sweep] models is empty");
  if (spec.seeds.empty()) doc.fail(line_of("seeds"), "[sweep] seeds is empty");
  for (auto m : spec.model_counts) {
    if (m < 1) doc.fail(line_of("models"), "[sweep] model counts must be >= 1");
  }
  return spec;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(IniDocument::load(path), std::filesystem::absolute(path).parent_path());
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  return parse_sweep_spec(IniDocument::load(path), std::filesystem::absolute(path).parent_path());
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream out;
  const auto& c = cfg.corpus;
  out << "[corpus]\n";
  if (c.explicit_splits()) {
    out << "train = " << c.train.string() << '\n' << "valid = " << c.valid.string() << '\n'
        << "test = " << c.test.string() << '\n';
  } else {
    out << "path = " << c.path.string() << '\n';
  }
  out << "min_token_freq = " << c.min_token_freq << '\n'
      << "max_tokens = " << c.max_tokens << '\n'
      << "split = " << format_double(c.split.train) << ' ' << format_double(c.split.validation) << ' '
      << format_double(c.split.test) << '\n';

  const auto& e = cfg.eco;
  out << "\n[ecosystem]\n"
      << "models = " << e.models << '\n'
      << "iterations = " << e.iterations << '\n'
      << "seed = " << e.seed << '\n'
      << "block_size = " << e.block_size << '\n'
      << "beam_width = " << e.beam_width << '\n'
      << "k_grid = " << join(e.grid.orders, [](int k) { return std::to_string(k); }) << '\n'
      << "alpha_grid = " << join(e.grid.alphas, [](double a) { return format_double(a); }) << '\n'
      << "subset_fraction = " << format_double(e.subset_fraction) << '\n'
      << "refit = " << (e.refit == RefitMode::kAccumulate ? "accumulate" : "fresh") << '\n'
      << "decay = " << format_double(e.decay) << '\n'
      << "support_order = " << e.support_order << '\n'
      << "baseline = " << (e.baseline ? "true" : "false") << '\n'
      << "workers = " << e.workers << '\n';

  out << "\n[output]\n"
      << "out = " << cfg.output.out.string() << '\n'
      << "persist_shards = " << (cfg.output.persist_shards ? "true" : "false") << '\n'
      << "persist_models = " << (cfg.output.persist_models ? "true" : "false") << '\n';
  return out.str();
}

std::string to_ini(const SweepSpec& spec) {
  std::string out = to_ini(spec.base);
  out += "\n[sweep]\nmodels = " + join(spec.model_counts, [](std::size_t m) { return std::to_string(m); }) + '\n';
  out += "seeds = " + join(spec.seeds, [](std::uint64_t s) { return std::to_string(s); }) + '\n';
  return out;
}

}  // namespace ecodiv
