#include "saas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "saas/errors.hpp"
#include "saas/rng.hpp"

namespace saas::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

class Reporter {
 public:
  explicit Reporter(const Progress& p) : progress_(p) {}
  void operator()(const std::string& line) {
    if (!progress_) return;
    std::lock_guard lock(mutex_);
    progress_(line);
  }

 private:
  const Progress& progress_;
  std::mutex mutex_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Dataset random_subset(const Dataset& ds, std::size_t max_samples, std::uint64_t seed) {
  if (max_samples == 0 || max_samples >= ds.size()) return ds;
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_samples);
  std::sort(idx.begin(), idx.end());
  return subset(ds, idx);
}

SaasConfig with_seed(SaasConfig cfg, std::uint64_t seed) {
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace

const Table& ExperimentResult::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw ValidationError("experiment '" + kind + "' has no table '" + name + "'");
}

std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  const double d = std::get<double>(cell);
  if (std::isnan(d)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += table.columns[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_cell(row[j]);
    }
    out += '\n';
  }
  return out;
}

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case DatasetKind::two_moons:
      return make_two_moons(spec.n, spec.noise, seed);
    case DatasetKind::blobs: {
      if (spec.dim == 0) throw ValidationError("blobs dataset needs dim >= 1");
      Matrix centers(spec.classes, spec.dim);
      for (std::size_t k = 0; k < spec.classes; ++k)
        centers(k, k % spec.dim) = spec.separation * static_cast<double>(1 + k / spec.dim);
      return make_blobs(spec.n, centers, spec.noise, seed);
    }
    case DatasetKind::idx:
      return random_subset(load_idx(spec.images_path, spec.labels_path), spec.max_samples, seed);
    case DatasetKind::csv:
      return random_subset(load_csv(spec.csv_path), spec.max_samples, seed);
  }
  throw ValidationError("unknown dataset kind");
}

ReplicateSeeds replicate_seeds(std::uint64_t master, const std::string& experiment,
                               std::size_t index) {
  const std::uint64_t r = derive_seed(master, experiment, index);
  return {sub_seed(r, 1), sub_seed(r, 2), sub_seed(r, 3), sub_seed(r, 4), sub_seed(r, 5)};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ExperimentResult corruption_speed_experiment(const SaasConfig& base, const DatasetSpec& data,
                                             const CorruptionParams& params,
                                             const RunOptions& opts) {
  const auto t0 = Clock::now();
  const auto fractions = sorted_unique(params.fractions);
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("corruption fractions must lie in [0, 1]");
  if (params.n_seeds == 0 || params.epochs_budget == 0)
    throw ValidationError("corruption experiment needs n_seeds >= 1 and epochs_budget >= 1");

  const std::size_t S = params.n_seeds;
  std::vector<LearningCurve> curves(fractions.size() * S);
  Reporter report(opts.progress);
  parallel_for(curves.size(), opts.jobs, [&](std::size_t item) {
    const std::size_t fi = item / S, s = item % S;
    const auto seeds = replicate_seeds(base.master_seed, "corruption-speed", s);
    const Dataset ds = make_dataset(data, seeds.data);
    const auto y = corrupt_labels(ds.y, fractions[fi], ds.K, seeds.corruption, params.mode);
    curves[item] = train_supervised(ds.X, y, ds.K, base.arch, base.init_scale,
                                    {params.epochs_budget, params.batch_size, params.lr, 0.0},
                                    seeds.init);
    report(fmt("corruption %.2f seed %.0f: L_T %.6f", fractions[fi], static_cast<double>(s),
               cumulative_loss(curves[item])));
  });

  ExperimentResult res{"corruption-speed", {}, base.master_seed, 0.0};
  Table traj{"trajectory", {"fraction", "seed", "epoch", "loss"}, {}};
  Table summary{"summary", {"fraction", "mean_LT", "std_LT"}, {}};
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    std::vector<double> lts;
    for (std::size_t s = 0; s < S; ++s) {
      const auto& c = curves[fi * S + s];
      const auto em = epoch_means(c);
      for (std::size_t e = 0; e < em.size(); ++e)
        traj.rows.push_back({fractions[fi], as_int(s), as_int(e + 1), em[e]});
      lts.push_back(cumulative_loss(c));
    }
    summary.rows.push_back({fractions[fi], mean(lts), stddev(lts)});
  }
  res.tables = {std::move(traj), std::move(summary)};
  res.wall_seconds = seconds_since(t0);
  return res;
}

ExperimentResult outer_epoch_speed_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                              const SplitSpec& split_spec,
                                              const OuterEpochParams& params,
                                              const RunOptions& opts) {
  const auto t0 = Clock::now();
  const auto ms = sorted_unique(params.m_list);
  if (ms.empty()) throw ValidationError("outer-epoch experiment needs a non-empty M list");
  if (params.probe_epochs < kProbeEpoch)
    throw ValidationError("outer-epoch experiment needs probe_epochs >= 2");
  if (params.n_seeds == 0) throw ValidationError("outer-epoch experiment needs n_seeds >= 1");

  struct SeedOut {
    std::vector<std::vector<double>> epoch_losses;  // per M
    std::vector<double> accuracy;                   // per M
  };
  std::vector<SeedOut> per_seed(params.n_seeds);
  Reporter report(opts.progress);
  parallel_for(params.n_seeds, opts.jobs, [&](std::size_t s) {
    const auto seeds = replicate_seeds(cfg.master_seed, "outer-epoch-speed", s);
    const Dataset ds = make_dataset(data, seeds.data);
    const DatasetSplit sp = split(ds, split_spec.sizes, split_spec.options, seeds.split);
    SaasConfig run_cfg = with_seed(cfg, seeds.saas);
    run_cfg.outer_epochs = ms.back();

    std::map<std::size_t, std::vector<int>> snaps;
    if (ms.front() == 0)
      snaps[0] = pseudo_labels(initial_posterior(sp.n_unlabeled(), sp.K, run_cfg));
    Phase1Report rep;
    if (ms.back() > 0) {
      rep = run_phase1(sp, run_cfg, [&](const OuterEpochStats& st, const PosteriorMatrix& P) {
        if (std::binary_search(ms.begin(), ms.end(), st.epoch)) snaps[st.epoch] = pseudo_labels(P);
        report(fmt("outer-epoch seed %.0f M %.0f: L_T %.6f", static_cast<double>(s),
                   static_cast<double>(st.epoch), st.cumulative_loss));
      });
    }
    for (auto m : ms)
      if (!snaps.count(m)) snaps[m] = pseudo_labels(rep.posterior);  // early stop before m

    SeedOut& out = per_seed[s];
    for (auto m : ms) {
      const auto& yh = snaps[m];
      const auto curve = train_supervised(sp.unlabeled_X, yh, sp.K, cfg.arch, cfg.init_scale,
                                          {params.probe_epochs, params.probe_batch, params.probe_lr, 0.0},
                                          seeds.init);
      out.epoch_losses.push_back(epoch_means(curve));
      out.accuracy.push_back(label_accuracy(yh, sp.unlabeled_true_y));
    }
  });

  ExperimentResult res{"outer-epoch-speed", {}, cfg.master_seed, 0.0};
  Table traj{"trajectory", {"M", "seed", "epoch", "loss"}, {}};
  Table snap{"snapshot", {"M", "seed", "pseudo_label_accuracy"}, {}};
  Table summary{"summary", {"M", "median_epoch2_loss", "mean_epoch2_loss"}, {}};
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    std::vector<double> e2;
    for (std::size_t s = 0; s < params.n_seeds; ++s) {
      const auto& em = per_seed[s].epoch_losses[mi];
      for (std::size_t e = 0; e < em.size(); ++e)
        traj.rows.push_back({as_int(ms[mi]), as_int(s), as_int(e + 1), em[e]});
      snap.rows.push_back({as_int(ms[mi]), as_int(s), per_seed[s].accuracy[mi]});
      e2.push_back(em[kProbeEpoch - 1]);
    }
    summary.rows.push_back({as_int(ms[mi]), median(e2), mean(e2)});
  }
  res.tables = {std::move(traj), std::move(snap), std::move(summary)};
  res.wall_seconds = seconds_since(t0);
  return res;
}

ExperimentResult unlabeled_sweep_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                            const SplitSpec& split_spec,
                                            const SweepParams& params,
                                            const RunOptions& opts) {
  const auto t0 = Clock::now();
  const auto counts = sorted_unique(params.unlabeled_counts);
  if (counts.empty()) throw ValidationError("sweep needs at least one unlabeled count");
  if (params.n_seeds == 0) throw ValidationError("sweep needs n_seeds >= 1");
  const std::size_t S = params.n_seeds;

  struct RunOut {
    double test_error = kNaN, unlabeled_error = kNaN;
  };
  std::vector<RunOut> runs(counts.size() * S);
  Reporter report(opts.progress);
  parallel_for(runs.size(), opts.jobs, [&](std::size_t item) {
    const std::size_t ci = item / S, s = item % S;
    const auto seeds = replicate_seeds(cfg.master_seed, "sweep-unlabeled", s);
    const Dataset ds = make_dataset(data, seeds.data);
    SplitSizes sizes = split_spec.sizes;
    if (sizes.test == 0) {
      const std::size_t used = sizes.labeled + sizes.validation + counts.back();
      if (used >= ds.size())
        throw ValidationError("sweep: dataset too small for the largest unlabeled count");
      sizes.test = ds.size() - used;
    }
    sizes.unlabeled = counts[ci];
    const DatasetSplit sp = split(ds, sizes, split_spec.options, seeds.split);
    const SaasConfig run_cfg = with_seed(cfg, seeds.saas);
    RunOut& out = runs[item];
    if (sp.n_unlabeled() == 0) {
      out.test_error = run_baseline(sp, run_cfg).metrics.test_error;
    } else {
      const auto rep = run_phase1(sp, run_cfg);
      const auto p2 = run_phase2(sp, pseudo_labels(rep.posterior), run_cfg);
      out.test_error = p2.metrics.test_error;
      out.unlabeled_error = p2.metrics.unlabeled_error;
    }
    report(fmt("sweep N_u %.0f seed %.0f: test error %.4f", static_cast<double>(counts[ci]),
               static_cast<double>(s), out.test_error));
  });

  ExperimentResult res{"sweep-unlabeled", {}, cfg.master_seed, 0.0};
  Table rows{"runs", {"n_unlabeled", "seed", "test_error", "unlabeled_error"}, {}};
  Table summary{"summary", {"n_unlabeled", "mean_test_accuracy", "std_test_accuracy"}, {}};
  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    std::vector<double> acc;
    for (std::size_t s = 0; s < S; ++s) {
      const auto& r = runs[ci * S + s];
      rows.rows.push_back({as_int(counts[ci]), as_int(s), r.test_error, r.unlabeled_error});
      acc.push_back(1.0 - r.test_error);
    }
    summary.rows.push_back({as_int(counts[ci]), mean(acc), stddev(acc)});
  }
  res.tables = {std::move(rows), std::move(summary)};
  res.wall_seconds = seconds_since(t0);
  return res;
}

ExperimentResult run_ssl(const SaasConfig& cfg, const DatasetSpec& data,
                         const SplitSpec& split_spec, std::size_t n_seeds,
                         const RunOptions& opts) {
  const auto t0 = Clock::now();
  if (n_seeds == 0) throw ValidationError("saas run needs n_seeds >= 1");

  struct SeedOut {
    double baseline = kNaN, unlabeled = kNaN, test = kNaN;
    Phase1Report phase1;
    std::vector<int> truth, y_hat;
  };
  std::vector<SeedOut> per_seed(n_seeds);
  Reporter report(opts.progress);
  parallel_for(n_seeds, opts.jobs, [&](std::size_t s) {
    const auto seeds = replicate_seeds(cfg.master_seed, "saas", s);
    const Dataset ds = make_dataset(data, seeds.data);
    const DatasetSplit sp = split(ds, split_spec.sizes, split_spec.options, seeds.split);
    const SaasConfig run_cfg = with_seed(cfg, seeds.saas);
    SeedOut& out = per_seed[s];
    out.baseline = run_baseline(sp, run_cfg).metrics.test_error;
    report(fmt("seed %.0f baseline test error %.4f", static_cast<double>(s), out.baseline));
    out.phase1 = run_phase1(sp, run_cfg, [&](const OuterEpochStats& st, const PosteriorMatrix&) {
      report(fmt("seed %.0f outer epoch %.0f", static_cast<double>(s), static_cast<double>(st.epoch)) +
             fmt(": L_T %.6f entropy %.4f accuracy %.4f", st.cumulative_loss, st.mean_entropy, st.accuracy));
    });
    out.y_hat = pseudo_labels(out.phase1.posterior);
    out.truth = sp.unlabeled_true_y;
    const auto p2 = run_phase2(sp, out.y_hat, run_cfg);
    out.unlabeled = p2.metrics.unlabeled_error;
    out.test = p2.metrics.test_error;
    report(fmt("seed %.0f SaaS unlabeled error %.4f test error %.4f", static_cast<double>(s),
               out.unlabeled, out.test));
  });

  ExperimentResult res{"saas", {}, cfg.master_seed, 0.0};
  Table runs{"runs", {"seed", "metric", "value"}, {}};
  Table summary{"summary", {"metric", "mean", "std"}, {}};
  Table phase1{"phase1", {"seed", "outer_epoch", "cumulative_loss", "pseudo_label_accuracy", "mean_entropy"}, {}};
  const std::size_t K = per_seed.front().phase1.posterior.P.cols;
  Table posterior{"posterior", {"seed", "index", "true_label", "pseudo_label"}, {}};
  for (std::size_t k = 0; k < K; ++k) posterior.columns.push_back("p" + std::to_string(k));

  std::vector<std::vector<double>> values(kSslMetrics.size());
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto& o = per_seed[s];
    const double v[] = {o.baseline, o.unlabeled, o.test};
    for (std::size_t m = 0; m < kSslMetrics.size(); ++m) {
      runs.rows.push_back({as_int(s), kSslMetrics[m], v[m]});
      values[m].push_back(v[m]);
    }
    phase1.rows.push_back(
        {as_int(s), as_int(0), kNaN, o.phase1.initial_accuracy, o.phase1.initial_entropy});
    for (const auto& st : o.phase1.epochs)
      phase1.rows.push_back({as_int(s), as_int(st.epoch), st.cumulative_loss, st.accuracy, st.mean_entropy});
    const Matrix& P = o.phase1.posterior.P;
    for (std::size_t i = 0; i < P.rows; ++i) {
      std::vector<Cell> row{as_int(s), as_int(i), static_cast<std::int64_t>(o.truth[i]),
                            static_cast<std::int64_t>(o.y_hat[i])};
      for (std::size_t k = 0; k < K; ++k) row.emplace_back(P(i, k));
      posterior.rows.push_back(std::move(row));
    }
  }
  for (std::size_t m = 0; m < kSslMetrics.size(); ++m)
    summary.rows.push_back({kSslMetrics[m], mean(values[m]), stddev(values[m])});
  res.tables = {std::move(runs), std::move(summary), std::move(phase1), std::move(posterior)};
  res.wall_seconds = seconds_since(t0);
  return res;
}

ExperimentResult run_baseline_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                         const SplitSpec& split_spec, std::size_t n_seeds,
                                         const RunOptions& opts) {
  const auto t0 = Clock::now();
  if (n_seeds == 0) throw ValidationError("baseline run needs n_seeds >= 1");
  std::vector<BaselineMetrics> metrics(n_seeds);
  Reporter report(opts.progress);
  parallel_for(n_seeds, opts.jobs, [&](std::size_t s) {
    // Same replicate seeds as the saas experiment, so the numbers line up.
    const auto seeds = replicate_seeds(cfg.master_seed, "saas", s);
    const Dataset ds = make_dataset(data, seeds.data);
    const DatasetSplit sp = split(ds, split_spec.sizes, split_spec.options, seeds.split);
    metrics[s] = run_baseline(sp, with_seed(cfg, seeds.saas)).metrics;
    report(fmt("seed %.0f baseline test error %.4f", static_cast<double>(s), metrics[s].test_error));
  });
  ExperimentResult res{"baseline", {}, cfg.master_seed, 0.0};
  Table runs{"runs", {"seed", "test_error", "validation_error"}, {}};
  Table summary{"summary", {"metric", "mean", "std"}, {}};
  std::vector<double> test, val;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    runs.rows.push_back({as_int(s), metrics[s].test_error, metrics[s].validation_error});
    test.push_back(metrics[s].test_error);
    val.push_back(metrics[s].validation_error);
  }
  summary.rows.push_back({std::string("baseline_test_error"), mean(test), stddev(test)});
  summary.rows.push_back({std::string("baseline_validation_error"), mean(val), stddev(val)});
  res.tables = {std::move(runs), std::move(summary)};
  res.wall_seconds = seconds_since(t0);
  return res;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result,
                                                   const std::filesystem::path& out_dir,
                                                   const nlohmann::ordered_json& config_echo) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["experiment"] = result.kind;
  meta["master_seed"] = result.master_seed;
  meta["config_digest"] = [&] {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_echo.dump())));
    return std::string(buf);
  }();
  meta["config"] = config_echo;
  meta["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : result.tables) {
    const auto file = result.kind + "_" + t.name + ".csv";
    write_atomic(out_dir / file, to_csv(t));
    written.push_back(out_dir / file);
    meta["tables"].push_back({{"name", t.name}, {"file", file}, {"rows", t.rows.size()},
                              {"columns", t.columns}});
  }
  const auto json_path = out_dir / (result.kind + ".json");
  write_atomic(json_path, meta.dump(2) + "\n");
  written.push_back(json_path);
  return written;
}

}  // namespace saas::bench
