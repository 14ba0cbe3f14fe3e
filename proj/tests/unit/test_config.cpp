#include <doctest.h>

#include <string>

#include "ecodiv/config.hpp"
#include "ecodiv/error.hpp"

using namespace ecodiv;

namespace {

const char* kFull = R"(# comment line
[corpus]
path = data/text.txt   # trailing comment
min_token_freq = 3
max_tokens = 5000
split = 0.7 0.2 0.1

[ecosystem]
models = 4
iterations = 6
seed = 99
block_size = 32
beam_width = 4
k_grid = 2, 3
alpha_grid = 0.5 0.05
subset_fraction = 0.5
refit = accumulate
decay = 0.25
support_order = 2
baseline = true
workers = 2

[output]
out = runs/x
persist_shards = true
persist_models = false
)";

std::string config_error(const std::string& text) {
  try {
    parse_run_config(IniDocument::parse(text, "cfg.ini"), "/base");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kConfig);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("config: every key is read and paths resolve against the base directory") {
  const auto cfg = parse_run_config(IniDocument::parse(kFull), "/base");
  CHECK(cfg.corpus.path == "/base/data/text.txt");
  CHECK(cfg.corpus.min_token_freq == 3);
  CHECK(cfg.corpus.max_tokens == 5000);
  CHECK(cfg.corpus.split == SplitFractions{0.7, 0.2, 0.1});
  CHECK(cfg.eco.models == 4);
  CHECK(cfg.eco.iterations == 6);
  CHECK(cfg.eco.seed == 99);
  CHECK(cfg.eco.block_size == 32);
  CHECK(cfg.eco.beam_width == 4);
  CHECK(cfg.eco.grid.orders == std::vector<int>{2, 3});
  CHECK(cfg.eco.grid.alphas == std::vector<double>{0.5, 0.05});
  CHECK(cfg.eco.subset_fraction == 0.5);
  CHECK(cfg.eco.refit == RefitMode::kAccumulate);
  CHECK(cfg.eco.decay == 0.25);
  CHECK(cfg.eco.support_order == 2);
  CHECK(cfg.eco.baseline);
  CHECK(cfg.eco.workers == 2);
  CHECK(cfg.output.out == "/base/runs/x");
  CHECK(cfg.output.persist_shards);
  CHECK_FALSE(cfg.output.persist_models);
}

TEST_CASE("config: defaults for omitted keys") {
  const auto cfg = parse_run_config(IniDocument::parse("[corpus]\npath = t.txt\n"), "/b");
  CHECK(cfg.eco.models == 1);
  CHECK(cfg.eco.iterations == 10);
  CHECK(cfg.eco.block_size == 128);
  CHECK(cfg.eco.beam_width == 5);
  CHECK(cfg.eco.subset_fraction == 0.4);
  CHECK(cfg.eco.grid.orders == std::vector<int>{3});
  CHECK(cfg.eco.grid.alphas == std::vector<double>{0.1, 0.01, 0.001});
  CHECK(cfg.eco.refit == RefitMode::kFresh);
  CHECK(cfg.corpus.min_token_freq == 2);
  CHECK(cfg.corpus.split == SplitFractions{});
}

TEST_CASE("config: snapshot round trip gives an identical config") {
  const auto cfg = parse_run_config(IniDocument::parse(kFull), "/base");
  const std::string snapshot = to_ini(cfg);
  const auto again = parse_run_config(IniDocument::parse(snapshot), "/elsewhere");
  CHECK(again == cfg);
  CHECK(to_ini(again) == snapshot);

  SweepSpec spec;
  spec.base = cfg;
  spec.model_counts = {1, 2, 4, 16};
  spec.seeds = {3, 5};
  const auto parsed = parse_sweep_spec(IniDocument::parse(to_ini(spec)), "/x");
  CHECK(parsed.base == spec.base);
  CHECK(parsed.model_counts == spec.model_counts);
  CHECK(parsed.seeds == spec.seeds);
}

TEST_CASE("config: explicit split files") {
  const auto cfg = parse_run_config(
      IniDocument::parse("[corpus]\ntrain = a.txt\nvalid = b.txt\ntest = c.txt\n"), "/d");
  CHECK(cfg.corpus.explicit_splits());
  CHECK(cfg.corpus.valid == "/d/b.txt");
  CHECK(cfg.output.out == "/d/runs/default");
  CHECK(parse_run_config(IniDocument::parse(to_ini(cfg)), "/q") == cfg);
  CHECK(config_error("[corpus]\ntrain = a.txt\n").find("explicit splits") != std::string::npos);
  CHECK(config_error("[corpus]\npath = p\ntrain = a\nvalid = b\ntest = c\n").find("cfg.ini:3:") != std::string::npos);
}

TEST_CASE("config: diagnostics name the file and line") {
  CHECK(config_error("[corpus]\npath = t.txt\n[ecosystem]\nmodels = four\n").find("cfg.ini:4:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\n\n[ecosystem]\ncolour = red\n").find("cfg.ini:5:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\npath = u.txt\n").find("duplicate key") != std::string::npos);
  CHECK(config_error("[corpus\n").find("cfg.ini:1:") != std::string::npos);
  CHECK(config_error("path = x\n").find("outside of any [section]") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\njust words\n").find("cfg.ini:3:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\nsplit = 0.5 0.5\n").find("cfg.ini:3:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\nsplit = 0.5 0.3 0.3\n").find("cfg.ini:3:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\n[ecosystem]\nrefit = sometimes\n").find("cfg.ini:4:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\n[ecosystem]\nbaseline = maybe\n").find("cfg.ini:4:") != std::string::npos);
  CHECK(config_error("[corpus]\npath = t.txt\n[ecosystem]\nmodels = 0\n").find("models must be >= 1") !=
        std::string::npos);
  CHECK(config_error("[ecosystem]\nmodels = 2\n").find("needs either") != std::string::npos);
}

TEST_CASE("config: sweep lists") {
  const std::string base = "[corpus]\npath = t.txt\n";
  const auto spec = parse_sweep_spec(IniDocument::parse(base + "[sweep]\nmodels = 1 2\nseeds = 7 8 9\n"), "/b");
  CHECK(spec.model_counts == std::vector<std::size_t>{1, 2});
  CHECK(spec.seeds == std::vector<std::uint64_t>{7, 8, 9});
  const auto defaults = parse_sweep_spec(IniDocument::parse(base), "/b");
  CHECK(defaults.model_counts == std::vector<std::size_t>{1, 2, 4, 16});
  CHECK_THROWS_AS(parse_sweep_spec(IniDocument::parse(base + "[sweep]\nmodels =\n"), "/b"), Error);
  CHECK_THROWS_AS(parse_sweep_spec(IniDocument::parse(base + "[sweep]\nmodels = 0 2\n"), "/b"), Error);
}
