#include "sgdvi/experiments.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sgdvi/bound.hpp"
#include "sgdvi/entropy.hpp"
#include "sgdvi/errors.hpp"
#include "sgdvi/oracles.hpp"

#ifndef SGDVI_VERSION
#define SGDVI_VERSION "unknown"
#endif

namespace sgdvi {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

// Summary entries, kept in insertion order for both summary.json and stdout.
class Report {
 public:
  void add(const std::string& key, const ordered_json& value) { doc_[key] = value; }

  void write(const fs::path& path, CommandResult& result) const {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc_.dump(2) << '\n';
    result.files.push_back(path);
    for (auto it = doc_.begin(); it != doc_.end(); ++it) result.report.emplace_back(it.key(), it.value().dump());
  }

 private:
  ordered_json doc_ = ordered_json::object();
};

void write_config(const ExperimentSpec& spec, CommandResult& result) {
  const fs::path path = fs::path(spec.out_dir) / "config.json";
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << ordered_json::parse(to_json(spec)).dump(2) << '\n';
  result.files.push_back(path);
}

void write_curve(const fs::path& path, const CurveFile& curve, CommandResult& result) {
  write_curve_file(path, curve);
  result.files.push_back(path);
}

std::vector<std::pair<std::string, std::string>> base_header(const ExperimentSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"code_version", code_version()},
          {"config", result_echo(spec)}};
}

std::shared_ptr<const Dataset> load_data(const DataSpec& d) {
  switch (d.source) {
    case DataSource::none:
      return nullptr;
    case DataSource::synthetic:
      return std::make_shared<const Dataset>(
          make_synthetic_regression(d.seed, d.n, d.features, d.noise, std::nullopt, d.shape));
    case DataSource::delimited:
      return std::make_shared<const Dataset>(load_delimited(d.path, d.schema));
    case DataSource::idx:
      return std::make_shared<const Dataset>(
          load_idx(d.images, d.labels, d.limit == 0 ? std::numeric_limits<std::size_t>::max() : d.limit));
  }
  return nullptr;
}

std::unique_ptr<Objective> make_objective(const ModelSpec& m, std::shared_ptr<const Dataset> train) {
  switch (m.type) {
    case ModelType::quadratic: {
      const Vector mu = m.quadratic_mu.size() == 0 ? Vector(Vector::Zero(m.quadratic_a.rows())) : m.quadratic_mu;
      return std::make_unique<QuadraticObjective>(m.quadratic_a, mu);
    }
    case ModelType::bayes_linear_regression:
      if (train->task != TaskKind::regression)
        throw ConfigError("bayes-linear-regression needs regression data");
      return std::make_unique<BayesLinearRegression>(train, m.noise_sigma);
    case ModelType::mlp:
      return std::make_unique<MlpObjective>(train, MlpConfig{m.hidden, m.activation, m.noise_sigma});
    case ModelType::mixture2d:
      return std::make_unique<GaussianMixture2D>(GaussianMixture2D::default_posterior());
  }
  throw ConfigError("unknown model type");
}

struct DataParts {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
};

DataParts prepare_data(const ExperimentSpec& spec) {
  DataParts parts;
  auto all = load_data(spec.data);
  if (!all) return parts;
  if (spec.data.train_fraction < 1.0) {
    auto [train, test] = split(*all, spec.data.train_fraction, spec.data.split_seed, spec.data.standardize);
    parts.train = std::make_shared<const Dataset>(std::move(train));
    parts.test = std::make_shared<const Dataset>(std::move(test));
  } else {
    parts.train = std::make_shared<const Dataset>(standardize_like(*all, *all, spec.data.standardize));
  }
  return parts;
}

Problem assemble(const ModelSpec& model, const DataParts& parts) {
  Problem p;
  p.train = parts.train;
  p.test = parts.test;
  p.objective = make_objective(model, parts.train);
  if (parts.test) p.test_objective = p.objective->rebind(parts.test);
  return p;
}

RunConfig repeat_config(const RunConfig& base, std::size_t repeat) {
  RunConfig c = base;
  c.seed_init = base.seed_init + repeat;
  return c;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void log_trace_outcome(std::ostream& log, const TrainTrace& trace, const std::string& label) {
  for (const auto& w : trace.warnings) log << "warning: " << label << ": " << w << '\n';
  if (trace.aborted) log << "error: " << label << ": " << trace.error << '\n';
}

// ---------------------------------------------------------------------------
// oracle checks

struct OracleCheck {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  double standard_error = kNaN;
  bool passed = false;
};

OracleCheck finish(OracleCheck c, double scale) {
  c.tolerance *= scale;
  c.passed = std::isfinite(c.error) && c.error <= c.tolerance;
  return c;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<OracleCheck> run_oracle_checks(double scale, std::ostream& log) {
  std::vector<OracleCheck> out;
  Rng rng(20240917);

  {
    OracleCheck c{"exact-logdet-vs-eigen"};
    for (int k = 0; k < 20; ++k) {
      const Matrix h = oracle::random_symmetric(30, -2.0, 5.0, rng);
      const double lu = exact_logdet_step(h, {0.1, std::nullopt}).value;
      const double eig = oracle::logdet_step_eig(h, 0.1);
      if (relative(lu, eig) >= c.error) {
        c.error = relative(lu, eig);
        c.value = lu;
        c.reference = eig;
      }
    }
    c.tolerance = 1e-10;
    out.push_back(finish(c, scale));
  }
  {
    OracleCheck c{"probe-identity"};
    for (int k = 0; k < 100; ++k) {
      const auto d = static_cast<Eigen::Index>(2 + k % 49);
      const Matrix h = oracle::random_symmetric(d, -3.0, 3.0, rng);
      const Vector r = standard_normal(static_cast<std::size_t>(d), rng);
      const HvpFn hvp = [&h](const Vector& v) { return Vector(h * v); };
      const double est = taylor_probe_estimate(hvp, r, {0.1, std::nullopt});
      const double ref = oracle::taylor_quadratic_form(h, r, 0.1);
      const double err = std::abs(est - ref) / std::max(std::abs(ref), 1e-300);
      if (err >= c.error) {
        c.error = err;
        c.value = est;
        c.reference = ref;
      }
    }
    c.tolerance = 1e-8;
    out.push_back(finish(c, scale));
  }
  {
    OracleCheck c{"hutchinson-mean"};
    const Matrix h = oracle::random_symmetric(10, 0.5, 4.0, rng);
    const HvpFn hvp = [&h](const Vector& v) { return Vector(h * v); };
    const std::size_t n = 20000;
    std::vector<double> samples(n);
    for (auto& s : samples) s = taylor_probe_estimate(hvp, standard_normal(10, rng), {0.1, std::nullopt});
    c.value = mean_of(samples);
    c.reference = oracle::taylor_trace_bound(h, 0.1);
    c.standard_error = standard_error(samples);
    c.error = std::abs(c.value - c.reference);
    c.tolerance = 3.0 * c.standard_error;
    out.push_back(finish(c, scale));
  }
  {
    OracleCheck c{"taylor-direction"};
    c.error = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
      const Matrix h = oracle::random_symmetric(8, -6.7, 6.7, rng);
      const double gap = oracle::taylor_trace_bound(h, 0.1) - oracle::logdet_step_eig(h, 0.1);
      if (gap > c.error) {
        c.error = gap;
        c.value = oracle::taylor_trace_bound(h, 0.1);
        c.reference = oracle::logdet_step_eig(h, 0.1);
      }
    }
    c.tolerance = 0.0;
    out.push_back(finish(c, scale));
  }
  {
    OracleCheck c{"linear-regression-evidence"};
    auto data = std::make_shared<const Dataset>(make_synthetic_regression(5, 5, 2, 0.5));
    const BayesLinearRegression blr(data, 0.8);
    c.reference = analytic_evidence(blr, GaussianPrior{0.9});
    const auto mc = oracle::linear_regression_evidence_mc(data->features, data->targets.col(0), 0.8, 0.9, 200000, 11);
    c.value = mc.value;
    c.standard_error = mc.standard_error;
    c.error = std::abs(c.value - c.reference);
    c.tolerance = 3.0 * mc.standard_error;
    out.push_back(finish(c, scale));
  }
  {
    OracleCheck c{"pushforward-entropy"};
    const Matrix a = oracle::random_symmetric(5, 0.2, 4.0, rng);
    const QuadraticObjective q(a, standard_normal(5, rng));
    RunConfig cfg;
    cfg.alpha = 0.1;
    cfg.iterations = 200;
    cfg.estimator = EstimatorMode::exact;
    const TrainTrace tr = run_training(q, cfg);
    for (const auto& r : tr.records) {
      const double ref = analytic_pushforward_entropy(a, 1.0, 0.1, r.t);
      if (std::abs(r.entropy - ref) >= c.error) {
        c.error = std::abs(r.entropy - ref);
        c.value = r.entropy;
        c.reference = ref;
      }
    }
    if (tr.aborted) c.error = kNaN;
    c.tolerance = 1e-8;
    out.push_back(finish(c, scale));
  }
  {
    auto data = std::make_shared<const Dataset>(
        make_synthetic_regression(9, 15, 3, 0.2, std::nullopt, SyntheticShape::nonlinear));
    const MlpObjective mlp(data, {4, Activation::tanh, 0.5});
    const Vector theta = 0.5 * standard_normal(mlp.dimension(), rng);
    const Vector v = standard_normal(mlp.dimension(), rng);
    const auto batch = mlp.full_batch();

    OracleCheck g{"mlp-gradient-fd"};
    const Vector grad = mlp.gradient(theta, batch);
    const Vector fd = oracle::fd_gradient(mlp, theta, batch);
    g.value = grad.norm();
    g.reference = fd.norm();
    g.error = (grad - fd).norm() / std::max(1.0, fd.norm());
    g.tolerance = 1e-5;
    out.push_back(finish(g, scale));

    OracleCheck h{"mlp-hvp-fd"};
    const Vector hv = mlp.hessian_vector_product(theta, v, batch);
    const Vector fdh = oracle::fd_hvp(mlp, theta, v, batch);
    h.value = hv.norm();
    h.reference = fdh.norm();
    h.error = (hv - fdh).norm() / std::max(1.0, fdh.norm());
    h.tolerance = 1e-4;
    out.push_back(finish(h, scale));
  }
  for (const auto& c : out) log << "oracle " << c.name << ": " << (c.passed ? "pass" : "FAIL") << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// particles

struct CloudMoments {
  std::size_t count = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

CloudMoments moments(const std::vector<Eigen::Vector2d>& pts) {
  CloudMoments m;
  m.count = pts.size();
  if (pts.empty()) return m;
  for (const auto& p : pts) m.mean += p;
  m.mean /= static_cast<double>(pts.size());
  if (pts.size() < 2) return m;
  for (const auto& p : pts) m.cov += (p - m.mean) * (p - m.mean).transpose();
  m.cov /= static_cast<double>(pts.size() - 1);
  return m;
}

}  // namespace

std::string code_version() { return SGDVI_VERSION; }

Problem build_problem(const ExperimentSpec& spec) { return assemble(spec.model, prepare_data(spec)); }

CurveFile trace_curve(const TrainTrace& trace, const ExperimentSpec& spec, std::size_t repeat) {
  const RunConfig c = repeat_config(spec.run, repeat);
  CurveFile curve;
  curve.header = base_header(spec);
  curve.header.emplace_back("repeat", std::to_string(repeat));
  curve.header.emplace_back("seed_init", std::to_string(c.seed_init));
  curve.header.emplace_back("seed_batch", std::to_string(c.seed_batch));
  curve.header.emplace_back("seed_probe", std::to_string(c.seed_probe));
  curve.header.emplace_back("alpha_lambda_init", format_number(trace.alpha_lambda_init));
  curve.header.emplace_back("aborted", trace.aborted ? "true" : "false");
  if (trace.aborted) curve.header.emplace_back("error", one_line(trace.error));
  for (const auto& w : trace.warnings) curve.header.emplace_back("warning", one_line(w));
  curve.columns = {"t", "train_loss", "test_loglik", "energy", "entropy", "bound", "bound_bits", "energy_full"};
  curve.rows.reserve(trace.records.size());
  for (const auto& r : trace.records)
    curve.rows.push_back({static_cast<double>(r.t), r.train_loss, r.test_loglik, r.energy, r.entropy, r.bound,
                          to_bits(r.bound), r.energy_full ? 1.0 : 0.0});
  return curve;
}

PeakIterations find_peaks(const CurveFile& curve) {
  const auto t = curve.column("t");
  const auto bound = curve.column("bound");
  const auto test = curve.column("test_loglik");
  const auto full = curve.column("energy_full");
  PeakIterations p;
  double best_bound = -std::numeric_limits<double>::infinity();
  double best_test = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (full[i] != 0.0 && bound[i] > best_bound) {
      best_bound = bound[i];
      p.bound = static_cast<std::size_t>(t[i]);
    }
    if (std::isfinite(test[i]) && test[i] > best_test) {
      best_test = test[i];
      p.test = static_cast<std::size_t>(t[i]);
    }
  }
  return p;
}

CommandResult cmd_train(const ExperimentSpec& spec, std::ostream& log) {
  CommandResult result;
  const Problem problem = build_problem(spec);
  spec.run.validate(problem.objective->data_size());
  write_config(spec, result);

  const std::size_t repeats = spec.repeats;
  std::vector<TrainTrace> traces(repeats);
  log << "train: " << repeats << " run(s), D = " << problem.objective->dimension() << ", T = "
      << spec.run.iterations << '\n';
  parallel_for(repeats, spec.threads, [&](std::size_t r) {
    traces[r] = run_training(*problem.objective, repeat_config(spec.run, r), problem.test_objective.get());
  });

  Report report;
  std::vector<double> terminal;
  std::size_t aborted = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto& tr = traces[r];
    const std::string label = "seed " + std::to_string(spec.run.seed_init + r);
    log_trace_outcome(log, tr, label);
    const CurveFile curve = trace_curve(tr, spec, r);
    write_curve(fs::path(spec.out_dir) / "train" / ("seed_" + std::to_string(spec.run.seed_init + r) + ".csv"),
                curve, result);
    const PeakIterations peaks = find_peaks(curve);
    const std::string key = "seed_" + std::to_string(spec.run.seed_init + r);
    report.add(key + ".t_star_bound", peaks.bound);
    report.add(key + ".bound_at_t_star", number(tr.records[peaks.bound].bound));
    if (peaks.test != kNone) {
      report.add(key + ".t_star_test", peaks.test);
      report.add(key + ".test_loglik_at_t_star", number(tr.records[peaks.test].test_loglik));
      report.add(key + ".t_star_gap",
                 peaks.bound > peaks.test ? peaks.bound - peaks.test : peaks.test - peaks.bound);
    }
    report.add(key + ".terminal_bound", number(tr.records.back().bound));
    if (tr.aborted) {
      ++aborted;
      result.failures.push_back(label + ": " + tr.error);
    } else {
      terminal.push_back(tr.records.back().bound);
    }
  }
  if (repeats > 1) {
    report.add("mean_terminal_bound", number(mean_of(terminal)));
    report.add("terminal_bound_se", number(standard_error(terminal)));
  }
  report.add("aborted_runs", aborted);
  report.write(fs::path(spec.out_dir) / "summary.json", result);
  result.exit_code = aborted > 0 ? kExitRunFailure : kExitOk;
  return result;
}

CommandResult cmd_sweep(const ExperimentSpec& spec, std::ostream& log) {
  CommandResult result;
  const DataParts parts = prepare_data(spec);
  const std::size_t points = spec.sweep.values.size();
  const std::size_t repeats = spec.repeats;

  std::vector<ExperimentSpec> point_specs(points, spec);
  std::vector<Problem> problems;
  problems.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    // Each point's curves echo a standalone train-curve spec for that value.
    ExperimentSpec& ps = point_specs[i];
    ps.kind = ExperimentKind::train_curve;
    ps.sweep = SweepSpec{};
    const double v = spec.sweep.values[i];
    switch (spec.sweep.parameter) {
      case SweepParameter::hidden:
        ps.model.hidden = static_cast<std::size_t>(v);
        break;
      case SweepParameter::g0:
        ps.run.g0 = v;
        break;
      case SweepParameter::alpha:
        ps.run.alpha = v;
        break;
      case SweepParameter::sigma0:
        ps.run.sigma0 = v;
        break;
    }
    problems.push_back(assemble(ps.model, parts));
    ps.run.validate(problems.back().objective->data_size());
  }
  write_config(spec, result);

  log << "sweep over " << to_string(spec.sweep.parameter) << ": " << points << " point(s) x " << repeats
      << " seed(s)\n";
  std::vector<TrainTrace> traces(points * repeats);
  parallel_for(points * repeats, spec.threads, [&](std::size_t job) {
    const std::size_t i = job / repeats;
    const std::size_t r = job % repeats;
    traces[job] = run_training(*problems[i].objective, repeat_config(point_specs[i].run, r),
                               problems[i].test_objective.get());
  });

  CurveFile table;
  table.header = base_header(spec);
  table.header.emplace_back("parameter", std::string(to_string(spec.sweep.parameter)));
  table.header.emplace_back("selection", spec.sweep.selection == Selection::terminal ? "terminal" : "best");
  table.header.emplace_back("seed_init", std::to_string(spec.run.seed_init));
  table.header.emplace_back("repeats", std::to_string(repeats));
  table.columns = {"value",      "t",           "bound",   "bound_se", "energy",    "entropy",
                   "train_loss", "test_loglik", "test_se", "completed", "failed"};

  Report report;
  std::size_t best_point = kNone;
  double best_bound = -std::numeric_limits<double>::infinity();
  std::size_t failed_total = 0;
  for (std::size_t i = 0; i < points; ++i) {
    std::vector<const TrainTrace*> ok;
    for (std::size_t r = 0; r < repeats; ++r) {
      const TrainTrace& tr = traces[i * repeats + r];
      const std::string label = std::string(to_string(spec.sweep.parameter)) + "=" +
                                format_number(spec.sweep.values[i]) + " seed " +
                                std::to_string(spec.run.seed_init + r);
      log_trace_outcome(log, tr, label);
      write_curve(fs::path(spec.out_dir) / "sweep" / ("point_" + std::to_string(i)) /
                      ("seed_" + std::to_string(spec.run.seed_init + r) + ".csv"),
                  trace_curve(tr, point_specs[i], r), result);
      if (tr.aborted)
        result.failures.push_back(label + ": " + tr.error);
      else
        ok.push_back(&tr);
    }
    const std::size_t failed = repeats - ok.size();
    failed_total += failed;

    std::size_t t_sel = spec.run.iterations;
    if (!ok.empty() && spec.sweep.selection == Selection::best) {
      double best_mean = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t <= spec.run.iterations; ++t) {
        bool all_full = true;
        std::vector<double> b;
        for (const auto* tr : ok) {
          all_full = all_full && tr->records[t].energy_full;
          b.push_back(tr->records[t].bound);
        }
        if (all_full && mean_of(b) > best_mean) {
          best_mean = mean_of(b);
          t_sel = t;
        }
      }
    }
    std::vector<double> bound, energy, entropy, train, test;
    for (const auto* tr : ok) {
      const TraceRecord& rec = tr->records[t_sel];
      bound.push_back(rec.bound);
      energy.push_back(rec.energy);
      entropy.push_back(rec.entropy);
      train.push_back(rec.train_loss);
      test.push_back(rec.test_loglik);
    }
    const double row_bound = mean_of(energy) + mean_of(entropy);
    table.rows.push_back({spec.sweep.values[i], ok.empty() ? kNaN : static_cast<double>(t_sel), row_bound,
                          standard_error(bound), mean_of(energy), mean_of(entropy), mean_of(train),
                          mean_of(test), standard_error(test), static_cast<double>(ok.size()),
                          static_cast<double>(failed)});
    if (std::isfinite(row_bound) && row_bound > best_bound) {
      best_bound = row_bound;
      best_point = i;
    }
  }
  write_curve(fs::path(spec.out_dir) / "sweep.csv", table, result);

  if (best_point != kNone) {
    report.add("best_value", spec.sweep.values[best_point]);
    report.add("best_bound", number(best_bound));
  }
  report.add("failed_runs", failed_total);
  report.write(fs::path(spec.out_dir) / "summary.json", result);
  result.exit_code = best_point == kNone ? kExitRunFailure : kExitOk;
  return result;
}

CommandResult cmd_particles2d(const ExperimentSpec& spec, std::ostream& log) {
  CommandResult result;
  const Problem problem = build_problem(spec);
  if (problem.objective->dimension() != 2)
    throw ConfigError("particles-2d needs a two-dimensional objective");
  write_config(spec, result);

  const auto* quadratic = dynamic_cast<const QuadraticObjective*>(problem.objective.get());
  Report report;
  std::vector<std::pair<std::string, double>> variants{{"plain", 0.0}};
  if (spec.particles.g0 > 0.0) variants.emplace_back("warped", spec.particles.g0);

  std::size_t failed_total = 0;
  for (const auto& [name, g0] : variants) {
    RunConfig cfg = spec.run;
    cfg.g0 = g0;
    if (cfg.snapshot_stride == 0) cfg.snapshot_stride = std::max<std::size_t>(cfg.iterations, 1);
    cfg.validate(problem.objective->data_size());
    log << "particles " << name << ": " << spec.particles.count << " particles, T = " << cfg.iterations << '\n';
    const EnsembleResult ens = run_ensemble(*problem.objective, cfg, spec.particles.count, nullptr, spec.threads);
    failed_total += ens.failed.size();
    for (std::size_t k : ens.failed)
      result.failures.push_back(name + " particle " + std::to_string(k) + ": " + ens.traces[k].error);

    // Snapshot times come from the longest trace; aborted particles drop out.
    std::vector<std::size_t> times;
    for (const auto& tr : ens.traces)
      if (tr.snapshots.size() > times.size()) {
        times.clear();
        for (const auto& s : tr.snapshots) times.push_back(s.first);
      }

    const fs::path dir = fs::path(spec.out_dir) / "particles" / name;
    CurveFile cloud;
    cloud.header = base_header(spec);
    cloud.header.emplace_back("variant", name);
    cloud.header.emplace_back("g0", format_number(g0));
    cloud.header.emplace_back("particles", std::to_string(spec.particles.count));
    cloud.columns = {"t",      "count",  "mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy",
                     "ledger_entropy_mean", "gaussian_fit_entropy", "analytic_cov_xx", "analytic_cov_xy",
                     "analytic_cov_yy"};
    for (std::size_t si = 0; si < times.size(); ++si) {
      const std::size_t t = times[si];
      CurveFile snap;
      snap.header = base_header(spec);
      snap.header.emplace_back("variant", name);
      snap.header.emplace_back("t", std::to_string(t));
      snap.columns = {"particle", "x", "y"};
      std::vector<Eigen::Vector2d> pts;
      std::vector<double> ledger;
      for (std::size_t k = 0; k < ens.traces.size(); ++k) {
        const auto& tr = ens.traces[k];
        if (si >= tr.snapshots.size()) continue;
        const ParamVector& th = tr.snapshots[si].second;
        snap.rows.push_back({static_cast<double>(k), th[0], th[1]});
        pts.emplace_back(th[0], th[1]);
        ledger.push_back(tr.ledger.entropy_at(t));
      }
      write_curve(dir / ("snapshot_" + std::to_string(t) + ".csv"), snap, result);

      const CloudMoments m = moments(pts);
      const double fit_entropy =
          pts.size() > 2 ? 0.5 * std::log((2.0 * M_PI * M_E * m.cov).determinant()) : kNaN;
      Eigen::Matrix2d analytic = Eigen::Matrix2d::Constant(kNaN);
      if (quadratic && g0 == 0.0)
        analytic = analytic_pushforward_moments(quadratic->a(), quadratic->mu(), cfg.sigma0, cfg.alpha, t).covariance;
      cloud.rows.push_back({static_cast<double>(t), static_cast<double>(m.count), m.mean[0], m.mean[1],
                            m.cov(0, 0), m.cov(0, 1), m.cov(1, 1), mean_of(ledger), fit_entropy,
                            analytic(0, 0), analytic(0, 1), analytic(1, 1)});
    }
    write_curve(dir / "cloud.csv", cloud, result);
    if (!cloud.rows.empty()) {
      const auto& last = cloud.rows.back();
      report.add(name + ".final_cov_xx", number(last[4]));
      report.add(name + ".final_cov_yy", number(last[6]));
      report.add(name + ".final_ledger_entropy_mean", number(last[7]));
    }
  }
  report.add("failed_particles", failed_total);
  report.write(fs::path(spec.out_dir) / "summary.json", result);
  result.exit_code = kExitOk;
  return result;
}

CommandResult cmd_oracle_check(const ExperimentSpec& spec, std::ostream& log) {
  CommandResult result;
  write_config(spec, result);
  const auto checks = run_oracle_checks(spec.tolerance_scale, log);
  ordered_json doc = ordered_json::array();
  Report report;
  std::size_t failed = 0;
  for (const auto& c : checks) {
    ordered_json entry;
    entry["name"] = c.name;
    entry["passed"] = c.passed;
    entry["value"] = number(c.value);
    entry["reference"] = number(c.reference);
    entry["error"] = number(c.error);
    entry["tolerance"] = number(c.tolerance);
    entry["standard_error"] = number(c.standard_error);
    doc.push_back(entry);
    report.add(c.name + ".error", number(c.error));
    report.add(c.name + ".tolerance", number(c.tolerance));
    if (std::isfinite(c.standard_error)) report.add(c.name + ".standard_error", number(c.standard_error));
    report.add(c.name + ".passed", c.passed);
    if (!c.passed) {
      ++failed;
      result.failures.push_back(c.name);
    }
  }
  const fs::path path = fs::path(spec.out_dir) / "oracle_check.json";
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
  }
  result.files.push_back(path);
  report.add("failed_checks", failed);
  report.write(fs::path(spec.out_dir) / "summary.json", result);
  for (const auto& name : result.failures) log << "error: oracle check failed: " << name << '\n';
  result.exit_code = failed > 0 ? kExitRunFailure : kExitOk;
  return result;
}

CommandResult cmd_ensemble(const ExperimentSpec& spec, std::ostream& log) {
  CommandResult result;
  const Problem problem = build_problem(spec);
  spec.run.validate(problem.objective->data_size());
  write_config(spec, result);
  log << "ensemble: " << spec.members << " member(s), T = " << spec.run.iterations << '\n';
  const EnsembleResult ens =
      run_ensemble(*problem.objective, spec.run, spec.members, problem.test_objective.get(), spec.threads);

  std::vector<double> bounds, member_test;
  for (std::size_t k = 0; k < ens.traces.size(); ++k) {
    const auto& tr = ens.traces[k];
    log_trace_outcome(log, tr, "member " + std::to_string(k));
    write_curve(fs::path(spec.out_dir) / "ensemble" / ("member_" + std::to_string(k) + ".csv"),
                trace_curve(tr, spec, k), result);
    if (tr.aborted) {
      result.failures.push_back("member " + std::to_string(k) + ": " + tr.error);
      continue;
    }
    bounds.push_back(tr.records.back().bound);
    if (problem.test_objective) member_test.push_back(tr.records.back().test_loglik);
  }

  Report report;
  report.add("members", spec.members);
  report.add("failed_members", ens.failed.size());
  report.add("mean_terminal_bound", number(mean_of(bounds)));
  report.add("terminal_bound_se", number(standard_error(bounds)));
  if (ens.ensemble_test_loglik) {
    report.add("ensemble_test_loglik", number(*ens.ensemble_test_loglik));
    report.add("mean_member_test_loglik", number(mean_of(member_test)));
  }
  report.write(fs::path(spec.out_dir) / "summary.json", result);
  result.exit_code = bounds.empty() ? kExitRunFailure : kExitOk;
  return result;
}

CommandResult run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  try {
    validate(spec);
    switch (spec.kind) {
      case ExperimentKind::train_curve:
        return cmd_train(spec, log);
      case ExperimentKind::sweep:
        return cmd_sweep(spec, log);
      case ExperimentKind::particles_2d:
        return cmd_particles2d(spec, log);
      case ExperimentKind::oracle_check:
        return cmd_oracle_check(spec, log);
      case ExperimentKind::ensemble:
        return cmd_ensemble(spec, log);
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return CommandResult{kExitConfigError, {}, {}, {e.what()}};
  } catch (const ParseError& e) {
    log << "input error: " << e.what() << '\n';
    return CommandResult{kExitConfigError, {}, {}, {e.what()}};
  } catch (const UnsupportedModel& e) {
    log << "config error: " << e.what() << '\n';
    return CommandResult{kExitConfigError, {}, {}, {e.what()}};
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return CommandResult{kExitRunFailure, {}, {}, {e.what()}};
  }
  return CommandResult{kExitConfigError, {}, {}, {"unknown experiment kind"}};
}

}  // namespace sgdvi
