#include "ecodiv/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "ecodiv/error.hpp"
#include "ecodiv/metrics.hpp"
#include "ecodiv/parallel.hpp"
#include "ecodiv/records.hpp"
#include "ecodiv/text_format.hpp"

namespace ecodiv {

namespace fs = std::filesystem;

namespace {

std::string_view truncate_tokens(std::string_view text, std::size_t max_tokens) {
  if (max_tokens == 0) return text;
  const auto words = split_whitespace(text);
  if (words.size() <= max_tokens) return text;
  const auto& last = words[max_tokens - 1];
  return text.substr(0, static_cast<std::size_t>(last.data() + last.size() - text.data()));
}

std::vector<TokenSequence> encode_blocks(const Vocab& vocab, const fs::path& path, std::size_t block_size) {
  const auto ids = vocab.encode(read_text_file(path));
  return blockify(ids, block_size);
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::kIo, "cannot append to " + path.string());
  out << line << '\n';
}

bool same_file_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return false;
  try {
    return read_text_file(path) == text;
  } catch (const Error&) {
    return false;
  }
}

std::string fmt(double v) { return format_double(v); }

/// Records at t >= 0 (the evolving part of a run).
std::vector<IterationRecord> evolution(const std::vector<IterationRecord>& records) {
  std::vector<IterationRecord> out;
  for (const auto& r : records) {
    if (r.t >= 0) out.push_back(r);
  }
  return out;
}

std::vector<double> trajectory(const std::vector<IterationRecord>& records) {
  std::vector<double> mu;
  for (const auto& r : records) mu.push_back(r.ecosystem_mean);
  return mu;
}

std::string histogram_dat(const Histogram& h, const std::string& title) {
  std::string out = "# " + title + "\n# edge_lo edge_hi count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out += fmt(h.edges[i]) + ' ' + fmt(h.edges[i + 1]) + ' ' + std::to_string(h.counts[i]) + '\n';
  }
  return out;
}

}  // namespace

PreparedCorpus prepare_corpus(const CorpusConfig& corpus, const EcosystemConfig& eco) {
  PreparedCorpus prepared;
  if (corpus.explicit_splits()) {
    const std::string train_text = read_text_file(corpus.train);
    auto ingest = ingest_text(truncate_tokens(train_text, corpus.max_tokens), corpus.min_token_freq);
    auto train = blockify(ingest.stream, eco.block_size);
    auto valid = encode_blocks(ingest.vocab, corpus.valid, eco.block_size);
    auto test = encode_blocks(ingest.vocab, corpus.test, eco.block_size);
    prepared.splits = make_splits(std::move(train), std::move(valid), std::move(test), eco.subset_fraction, eco.seed);
    prepared.vocab = std::move(ingest.vocab);
  } else {
    const std::string text = read_text_file(corpus.path);
    auto ingest = ingest_text(truncate_tokens(text, corpus.max_tokens), corpus.min_token_freq);
    const auto blocks = blockify(ingest.stream, eco.block_size);
    prepared.splits = make_splits(blocks, corpus.split, eco.subset_fraction, eco.seed);
    prepared.vocab = std::move(ingest.vocab);
  }
  return prepared;
}

void RunOverrides::apply(RunConfig& cfg) const {
  if (seed) cfg.eco.seed = *seed;
  if (out) cfg.output.out = fs::absolute(*out).lexically_normal();
  if (workers) cfg.eco.workers = *workers;
  if (persist_shards) cfg.output.persist_shards = true;
  if (baseline) cfg.eco.baseline = true;
}

int execute_run(const RunConfig& cfg, std::ostream& log) {
  PreparedCorpus corpus;
  try {
    cfg.eco.validate();
    corpus = prepare_corpus(cfg.corpus, cfg.eco);
    cfg.eco.validate_for(corpus.splits.train_gen.size());
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path dir = cfg.output.out;
  std::vector<IterationRecord> records;
  try {
    fs::create_directories(dir);
    for (auto name : {std::string(kCompleteMarker), std::string(kFailedMarker), std::string("records.jsonl"),
                      std::string("histograms.jsonl"), std::string("summary.csv")}) {
      fs::remove(dir / name);
    }
    write_text_file(dir / "config.ini", to_ini(cfg));
    corpus.vocab.save(dir / "vocab.txt");
    if (cfg.output.persist_shards) fs::create_directories(dir / "shards");
    if (cfg.output.persist_models) fs::create_directories(dir / "models");

    const NGramTrainer trainer(corpus.vocab.size(), cfg.eco.grid, cfg.eco.refit, cfg.eco.decay);
    RunCallbacks callbacks;
    callbacks.on_record = [&](const IterationRecord& r) {
      append_line(dir / "records.jsonl", record_to_json(r));
      append_line(dir / "histograms.jsonl", histogram_to_json(r.t, r.distribution.hist));
      records.push_back(r);
      log << "t=" << r.t << " M=" << r.models << " mu_t=" << fmt(r.ecosystem_mean);
      if (r.pooled_support) log << " recall=" << fmt(r.pooled_support->recall);
      log << " iqr=" << fmt(r.distribution.summary.iqr) << '\n';
    };
    callbacks.on_iteration = [&](const EcosystemState& before, const IterationOutcome& outcome) {
      const std::string stem = "t" + std::to_string(before.t) + "_m";
      if (cfg.output.persist_shards) {
        for (const auto& shard : outcome.artificial) {
          write_shard_file(dir / "shards" / (stem + std::to_string(shard.owner) + ".txt"), shard,
                           {corpus.vocab.fingerprint(), shard.owner, static_cast<long>(before.t)});
        }
      }
      if (cfg.output.persist_models) {
        for (std::size_t m = 0; m < outcome.next.models.size(); ++m) {
          const auto* ngram = outcome.next.models[m]->ngram();
          if (ngram == nullptr) continue;
          std::ofstream out(dir / "models" / (stem + std::to_string(m) + ".ngram"), std::ios::binary);
          ngram->save(out);
        }
      }
    };
    run(corpus.splits, cfg.eco, trainer, callbacks);
    write_text_file(dir / "summary.csv", summary_csv(records));
    write_text_file(dir / kCompleteMarker, "ok\n");
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    try {
      write_text_file(dir / "summary.csv", summary_csv(records));
      write_text_file(dir / kFailedMarker, std::string(e.what()) + "\n");
    } catch (const std::exception& nested) {
      log << "error: could not persist failure marker: " << nested.what() << '\n';
    }
    return kExitRuntime;
  }
}

int cmd_run(const fs::path& config_path, const RunOverrides& overrides, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
    overrides.apply(cfg);
    cfg.eco.validate();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const int code = execute_run(cfg, log);
  if (code == kExitOk) log << "run complete: " << cfg.output.out.string() << '\n';
  return code;
}

std::string run_directory_name(std::size_t models, std::uint64_t seed) {
  return "M" + std::to_string(models) + "_seed" + std::to_string(seed);
}

SweepOutcome execute_sweep(const SweepSpec& spec, std::size_t workers, std::ostream& log) {
  SweepOutcome outcome;
  const fs::path root = spec.base.output.out;

  struct Job {
    std::string name;
    RunConfig cfg;
  };
  std::vector<Job> jobs;
  for (auto m : spec.model_counts) {
    for (auto seed : spec.seeds) {
      Job job{run_directory_name(m, seed), spec.base};
      job.cfg.eco.models = m;
      job.cfg.eco.seed = seed;
      job.cfg.output.out = root / "runs" / job.name;
      if (workers > 1) job.cfg.eco.workers = 1;
      jobs.push_back(std::move(job));
    }
  }

  // Every M must divide N; N does not depend on the seed.
  try {
    spec.base.eco.validate();
    const auto corpus = prepare_corpus(spec.base.corpus, spec.base.eco);
    for (const auto& job : jobs) job.cfg.eco.validate_for(corpus.splits.train_gen.size());
    fs::create_directories(root / "runs");
    fs::remove(root / kCompleteMarker);
    write_text_file(root / "sweep.ini", to_ini(spec));
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    outcome.exit_code = e.code() == Errc::kConfig ? kExitConfig : kExitRuntime;
    return outcome;
  }

  std::vector<int> status(jobs.size(), kExitOk);
  std::vector<char> skipped(jobs.size(), 0);
  std::mutex log_mutex;
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const fs::path dir = job.cfg.output.out;
    if (fs::exists(dir / kCompleteMarker) && same_file_text(dir / "config.ini", to_ini(job.cfg))) {
      skipped[i] = 1;
      std::lock_guard lock(log_mutex);
      log << "skip " << job.name << " (complete)\n";
      return;
    }
    std::ostringstream run_log;
    status[i] = execute_run(job.cfg, run_log);
    std::lock_guard lock(log_mutex);
    log << "== " << job.name << " ==\n" << run_log.str();
  });

  std::string table = std::string(kSweepHeader) + '\n' + std::string(kSweepColumns) + '\n';
  std::map<std::size_t, std::vector<double>> mu_by_m;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto m = job.cfg.eco.models;
    std::string row = fmt(hill_shannon_equal(m)) + ',' + std::to_string(m) + ',' + std::to_string(job.cfg.eco.seed) + ',';
    const fs::path dir = job.cfg.output.out;
    bool ok = status[i] == kExitOk && fs::exists(dir / kCompleteMarker);
    if (ok) {
      try {
        const auto evo = evolution(read_records(dir / "records.jsonl"));
        const auto mu = trajectory(evo);
        const double mu_total = aggregated_mean(mu);
        row += fmt(mu_total) + ',' + (mu.size() >= 2 ? fmt(perplexity_rate(mu)) : std::string()) + ",ok";
        mu_by_m[m].push_back(mu_total);
      } catch (const Error& e) {
        log << "error: " << job.name << ": " << e.what() << '\n';
        ok = false;
      }
    }
    if (!ok) {
      row += ",,failed";
      outcome.failed.push_back(job.name);
    } else if (skipped[i]) {
      outcome.skipped.push_back(job.name);
    } else {
      outcome.executed.push_back(job.name);
    }
    table += row + '\n';
  }

  std::string plot = "# D mean_mu_T min_mu_T max_mu_T seeds\n";
  for (const auto& [m, values] : mu_by_m) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    plot += fmt(hill_shannon_equal(m)) + ' ' + fmt(aggregated_mean(values)) + ' ' + fmt(*lo) + ' ' + fmt(*hi) + ' ' +
            std::to_string(values.size()) + '\n';
  }
  try {
    write_text_file(root / "sweep_summary.csv", table);
    write_text_file(root / "d_vs_mu.dat", plot);
    if (outcome.failed.empty()) write_text_file(root / kCompleteMarker, "ok\n");
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    outcome.exit_code = kExitRuntime;
    return outcome;
  }
  if (!outcome.failed.empty()) outcome.exit_code = kExitRuntime;
  return outcome;
}

int cmd_sweep(const fs::path& spec_path, const RunOverrides& overrides, std::ostream& log) {
  SweepSpec spec;
  try {
    spec = load_sweep_spec(spec_path);
    overrides.apply(spec.base);
    if (overrides.seed) spec.seeds = {*overrides.seed};
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::size_t workers = overrides.workers.value_or(1);
  const auto outcome = execute_sweep(spec, workers, log);
  log << "sweep: " << outcome.executed.size() << " executed, " << outcome.skipped.size() << " skipped, "
      << outcome.failed.size() << " failed\n";
  return outcome.exit_code;
}

namespace {

struct RunData {
  std::string name;
  std::size_t models = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
};

std::string run_report_text(const RunData& run) {
  std::ostringstream out;
  out << "run " << run.name << "\n";
  out << "     t        mu_t      recall   precision         iqr\n";
  for (const auto& r : run.records) {
    char line[128];
    const double recall = r.pooled_support ? r.pooled_support->recall : 0.0;
    const double precision = r.pooled_support ? r.pooled_support->precision : 0.0;
    std::snprintf(line, sizeof(line), "%6ld %11.4f %11.6f %11.6f %11.4f\n", r.t, r.ecosystem_mean, recall, precision,
                  r.distribution.summary.iqr);
    out << line;
  }
  const auto evo = evolution(run.records);
  if (!evo.empty()) out << "mu_T = " << fmt(aggregated_mean(trajectory(evo))) << "\n";
  return out.str();
}

std::string trajectory_dat(const RunData& run) {
  std::string out = "# t mu_t recall precision iqr std\n";
  for (const auto& r : run.records) {
    out += std::to_string(r.t) + ' ' + fmt(r.ecosystem_mean) + ' ' +
           (r.pooled_support ? fmt(r.pooled_support->recall) + ' ' + fmt(r.pooled_support->precision) : "nan nan") +
           ' ' + fmt(r.distribution.summary.iqr) + ' ' + fmt(r.distribution.summary.std) + '\n';
  }
  return out;
}

void write_histograms(const fs::path& report, const std::string& prefix, const std::vector<const RunData*>& runs) {
  // Pooled over runs (seeds): counts add bin by bin.
  const auto& first = runs.front()->records;
  const auto evo = evolution(first);
  if (evo.empty()) return;
  for (long t : {evo.front().t, evo.back().t}) {
    Histogram sum = histogram({});
    for (const auto* run : runs) {
      for (const auto& r : run->records) {
        if (r.t != t) continue;
        for (std::size_t b = 0; b < sum.counts.size(); ++b) sum.counts[b] += r.distribution.hist.counts[b];
      }
    }
    write_text_file(report / (prefix + "hist_t" + std::to_string(t) + ".dat"),
                    histogram_dat(sum, "pooled per-sequence perplexity, t=" + std::to_string(t)));
  }
}

}  // namespace

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  std::vector<RunData> runs;
  std::vector<std::string> problems;
  const bool is_sweep = fs::exists(dir / "sweep.ini");

  auto load_run = [&](const fs::path& run_dir, std::string name, std::size_t models, std::uint64_t seed) {
    const fs::path path = run_dir / "records.jsonl";
    try {
      auto records = read_records(path);
      if (records.empty()) throw Error(Errc::kFormat, path.string() + ": no records");
      runs.push_back({std::move(name), models, seed, std::move(records)});
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  };

  if (is_sweep) {
    try {
      const auto spec = parse_sweep_spec(IniDocument::load(dir / "sweep.ini"), dir);
      for (auto m : spec.model_counts) {
        for (auto seed : spec.seeds) {
          const auto name = run_directory_name(m, seed);
          load_run(dir / "runs" / name, name, m, seed);
        }
      }
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  } else if (fs::exists(dir / "records.jsonl")) {
    std::size_t models = 0;
    std::uint64_t seed = 0;
    try {
      const auto cfg = parse_run_config(IniDocument::load(dir / "config.ini"), dir);
      models = cfg.eco.models;
      seed = cfg.eco.seed;
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
    load_run(dir, dir.filename().string(), models, seed);
  } else {
    problems.push_back((dir / "records.jsonl").string() + ": not found (and no sweep.ini)");
  }

  if (!problems.empty()) {
    err << "report: cannot read " << problems.size() << " input(s):\n";
    for (const auto& p : problems) err << "  " << p << '\n';
    return kExitReport;
  }

  const fs::path report = dir / "report";
  try {
    fs::create_directories(report);
    std::map<std::size_t, std::vector<const RunData*>> by_m;
    for (const auto& run : runs) by_m[run.models].push_back(&run);

    std::string d_vs_mu = "# D mean_mu_T min_mu_T max_mu_T runs\n";
    for (const auto& [m, group] : by_m) {
      std::vector<double> totals;
      for (const auto* run : group) {
        const auto evo = evolution(run->records);
        if (!evo.empty()) totals.push_back(aggregated_mean(trajectory(evo)));
      }
      if (!totals.empty()) {
        const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
        d_vs_mu += fmt(hill_shannon_equal(m)) + ' ' + fmt(aggregated_mean(totals)) + ' ' + fmt(*lo) + ' ' + fmt(*hi) +
                   ' ' + std::to_string(totals.size()) + '\n';
      }

      const std::string prefix = is_sweep ? "M" + std::to_string(m) + "_" : std::string();
      if (is_sweep) {
        // t, mean over seeds, then one column per seed.
        std::map<long, std::vector<double>> rows;
        for (const auto* run : group) {
          for (const auto& r : run->records) rows[r.t].push_back(r.ecosystem_mean);
        }
        std::string dat = "# t mean_mu_t";
        for (const auto* run : group) dat += " seed" + std::to_string(run->seed);
        dat += '\n';
        for (const auto& [t, values] : rows) {
          dat += std::to_string(t) + ' ' + fmt(aggregated_mean(values));
          for (double v : values) dat += ' ' + fmt(v);
          dat += '\n';
        }
        write_text_file(report / ("trajectory_M" + std::to_string(m) + ".dat"), dat);
      } else {
        write_text_file(report / "trajectory.dat", trajectory_dat(*group.front()));
      }
      write_histograms(report, prefix, group);
    }
    write_text_file(report / "d_vs_mu.dat", d_vs_mu);
  } catch (const Error& e) {
    err << "report: " << e.what() << '\n';
    return kExitReport;
  }

  for (const auto& run : runs) out << run_report_text(run) << '\n';
  out << "report data written to " << report.string() << '\n';
  return kExitOk;
}

}  // namespace ecodiv
