#include "sgdvi/experiment_spec.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sgdvi/errors.hpp"

namespace sgdvi {
namespace {

using nlohmann::json;

template <class E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<ExperimentKind> kKinds[] = {
    {ExperimentKind::train_curve, "train-curve"},
    {ExperimentKind::sweep, "sweep"},
    {ExperimentKind::particles_2d, "particles-2d"},
    {ExperimentKind::oracle_check, "oracle-check"},
    {ExperimentKind::ensemble, "ensemble"},
};
constexpr EnumName<ModelType> kModels[] = {
    {ModelType::quadratic, "quadratic"},
    {ModelType::bayes_linear_regression, "bayes-linear-regression"},
    {ModelType::mlp, "mlp"},
    {ModelType::mixture2d, "mixture2d"},
};
constexpr EnumName<Activation> kActivations[] = {
    {Activation::tanh, "tanh"},
    {Activation::sigmoid, "sigmoid"},
};
constexpr EnumName<DataSource> kSources[] = {
    {DataSource::none, "none"},
    {DataSource::synthetic, "synthetic"},
    {DataSource::delimited, "delimited"},
    {DataSource::idx, "idx"},
};
constexpr EnumName<SyntheticShape> kShapes[] = {
    {SyntheticShape::linear, "linear"},
    {SyntheticShape::nonlinear, "nonlinear"},
};
constexpr EnumName<Standardize> kStandardize[] = {
    {Standardize::none, "none"},
    {Standardize::features, "features"},
    {Standardize::features_and_targets, "features-and-targets"},
};
constexpr EnumName<SweepParameter> kSweepParams[] = {
    {SweepParameter::hidden, "hidden"},
    {SweepParameter::g0, "g0"},
    {SweepParameter::alpha, "alpha"},
    {SweepParameter::sigma0, "sigma0"},
};
constexpr EnumName<Selection> kSelections[] = {
    {Selection::terminal, "terminal"},
    {Selection::best, "best"},
};
constexpr EnumName<BatchMode> kBatchModes[] = {
    {BatchMode::fixed_sequence, "fixed-sequence"},
    {BatchMode::resampled, "resampled"},
};
constexpr EnumName<EstimatorMode> kEstimators[] = {
    {EstimatorMode::exact, "exact"},
    {EstimatorMode::taylor_probe, "taylor-probe"},
};

template <class E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E value) {
  for (const auto& e : table)
    if (e.value == value) return e.name;
  return "?";
}

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const json& j, const std::string& key) {
  const auto text = j.get<std::string>();
  for (const auto& e : table)
    if (e.name == text) return e.value;
  std::string choices;
  for (const auto& e : table) choices += (choices.empty() ? "" : ", ") + std::string(e.name);
  throw ConfigError("'" + key + "': unknown value '" + text + "' (expected one of " + choices + ")");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("'" + key + "' must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError("'" + key + "' rows must all have the same length");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("'" + key + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["kind"] = name_of(kKinds, s.kind);

  auto& m = j["model"];
  m["type"] = name_of(kModels, s.model.type);
  m["hidden"] = s.model.hidden;
  m["activation"] = name_of(kActivations, s.model.activation);
  m["noise_sigma"] = s.model.noise_sigma;
  m["a"] = matrix_to_json(s.model.quadratic_a);
  m["mu"] = vector_to_json(s.model.quadratic_mu);

  auto& d = j["data"];
  d["source"] = name_of(kSources, s.data.source);
  d["path"] = s.data.path;
  d["delimiter"] = std::string(1, s.data.schema.delimiter);
  d["has_header"] = s.data.schema.has_header;
  d["target_columns"] = s.data.schema.target_columns;
  d["classification"] = s.data.schema.classification;
  d["images"] = s.data.images;
  d["labels"] = s.data.labels;
  d["limit"] = s.data.limit;
  d["seed"] = s.data.seed;
  d["n"] = s.data.n;
  d["features"] = s.data.features;
  d["noise"] = s.data.noise;
  d["shape"] = name_of(kShapes, s.data.shape);
  d["train_fraction"] = s.data.train_fraction;
  d["split_seed"] = s.data.split_seed;
  d["standardize"] = name_of(kStandardize, s.data.standardize);

  const RunConfig& c = s.run;
  auto& r = j["run"];
  r["alpha"] = c.alpha;
  r["sigma0"] = c.sigma0;
  r["prior_sigma"] = c.prior_sigma ? json(*c.prior_sigma) : json(nullptr);
  r["iterations"] = c.iterations;
  r["g0"] = c.g0;
  r["batch_size"] = c.batch_size;
  r["batch_mode"] = name_of(kBatchModes, c.batch_mode);
  r["estimator"] = name_of(kEstimators, c.estimator);
  r["probes_per_step"] = c.probes_per_step;
  r["seed_init"] = c.seed_init;
  r["seed_batch"] = c.seed_batch;
  r["seed_probe"] = c.seed_probe;
  r["energy_stride"] = c.energy_stride;
  r["snapshot_stride"] = c.snapshot_stride;
  r["safety_power_iters"] = c.safety_power_iters;
  r["regime_check_iters"] = c.regime_check_iters;

  auto& w = j["sweep"];
  w["parameter"] = name_of(kSweepParams, s.sweep.parameter);
  w["values"] = s.sweep.values;
  w["selection"] = name_of(kSelections, s.sweep.selection);

  j["particles"]["count"] = s.particles.count;
  j["particles"]["g0"] = s.particles.g0;

  j["repeats"] = s.repeats;
  j["members"] = s.members;
  j["threads"] = s.threads;
  j["tolerance_scale"] = s.tolerance_scale;
  j["out_dir"] = s.out_dir;
  return j;
}

// Keys that take JSON null, arrays or nested values of any shape.
bool is_leaf(const std::string& path) {
  return path == "run.prior_sigma" || path == "model.a" || path == "model.mu" ||
         path == "data.target_columns" || path == "sweep.values";
}

void check_keys(const json& doc, const json& reference, const std::string& prefix) {
  if (!doc.is_object()) throw ConfigError("'" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    const json& ref = reference.at(it.key());
    if (ref.is_object() && !is_leaf(path)) check_keys(it.value(), ref, path);
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

ExperimentSpec spec_from_json(const json& j, const std::filesystem::path& base) {
  ExperimentSpec s;
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "sweep-hidden") {
      s.kind = ExperimentKind::sweep;
      s.sweep.parameter = SweepParameter::hidden;
    } else if (kind == "sweep-threshold") {
      s.kind = ExperimentKind::sweep;
      s.sweep.parameter = SweepParameter::g0;
    } else {
      s.kind = parse_enum(kKinds, j.at("kind"), "kind");
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    if (m.contains("type")) s.model.type = parse_enum(kModels, m.at("type"), "model.type");
    read(m, "hidden", s.model.hidden);
    if (m.contains("activation"))
      s.model.activation = parse_enum(kActivations, m.at("activation"), "model.activation");
    read(m, "noise_sigma", s.model.noise_sigma);
    if (m.contains("a")) s.model.quadratic_a = matrix_from_json(m.at("a"), "model.a");
    if (m.contains("mu")) s.model.quadratic_mu = vector_from_json(m.at("mu"), "model.mu");
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    if (d.contains("source")) s.data.source = parse_enum(kSources, d.at("source"), "data.source");
    read(d, "path", s.data.path);
    if (d.contains("delimiter")) {
      const auto delim = d.at("delimiter").get<std::string>();
      if (delim.size() != 1) throw ConfigError("'data.delimiter' must be a single character");
      s.data.schema.delimiter = delim[0];
    }
    read(d, "has_header", s.data.schema.has_header);
    read(d, "target_columns", s.data.schema.target_columns);
    read(d, "classification", s.data.schema.classification);
    read(d, "images", s.data.images);
    read(d, "labels", s.data.labels);
    read(d, "limit", s.data.limit);
    read(d, "seed", s.data.seed);
    read(d, "n", s.data.n);
    read(d, "features", s.data.features);
    read(d, "noise", s.data.noise);
    if (d.contains("shape")) s.data.shape = parse_enum(kShapes, d.at("shape"), "data.shape");
    read(d, "train_fraction", s.data.train_fraction);
    read(d, "split_seed", s.data.split_seed);
    if (d.contains("standardize"))
      s.data.standardize = parse_enum(kStandardize, d.at("standardize"), "data.standardize");
    s.data.path = resolve_path(s.data.path, base);
    s.data.images = resolve_path(s.data.images, base);
    s.data.labels = resolve_path(s.data.labels, base);
  }

  if (j.contains("run")) {
    const json& r = j.at("run");
    RunConfig& c = s.run;
    read(r, "alpha", c.alpha);
    read(r, "sigma0", c.sigma0);
    if (r.contains("prior_sigma")) {
      if (r.at("prior_sigma").is_null())
        c.prior_sigma.reset();
      else
        c.prior_sigma = r.at("prior_sigma").get<double>();
    }
    read(r, "iterations", c.iterations);
    read(r, "g0", c.g0);
    read(r, "batch_size", c.batch_size);
    if (r.contains("batch_mode")) c.batch_mode = parse_enum(kBatchModes, r.at("batch_mode"), "run.batch_mode");
    if (r.contains("estimator")) c.estimator = parse_enum(kEstimators, r.at("estimator"), "run.estimator");
    read(r, "probes_per_step", c.probes_per_step);
    read(r, "seed_init", c.seed_init);
    read(r, "seed_batch", c.seed_batch);
    read(r, "seed_probe", c.seed_probe);
    read(r, "energy_stride", c.energy_stride);
    read(r, "snapshot_stride", c.snapshot_stride);
    read(r, "safety_power_iters", c.safety_power_iters);
    read(r, "regime_check_iters", c.regime_check_iters);
  }

  if (j.contains("sweep")) {
    const json& w = j.at("sweep");
    if (w.contains("parameter"))
      s.sweep.parameter = parse_enum(kSweepParams, w.at("parameter"), "sweep.parameter");
    read(w, "values", s.sweep.values);
    if (w.contains("selection"))
      s.sweep.selection = parse_enum(kSelections, w.at("selection"), "sweep.selection");
  }

  if (j.contains("particles")) {
    read(j.at("particles"), "count", s.particles.count);
    read(j.at("particles"), "g0", s.particles.g0);
  }

  read(j, "repeats", s.repeats);
  read(j, "members", s.members);
  read(j, "threads", s.threads);
  read(j, "tolerance_scale", s.tolerance_scale);
  read(j, "out_dir", s.out_dir);
  return s;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return name_of(kKinds, kind); }
std::string_view to_string(SweepParameter parameter) { return name_of(kSweepParams, parameter); }

std::string to_json(const ExperimentSpec& spec) { return spec_to_json(spec).dump(); }

std::string result_echo(const ExperimentSpec& spec) {
  json j = spec_to_json(spec);
  j.erase("out_dir");
  j.erase("threads");
  return j.dump();
}

ExperimentSpec parse_spec(std::string_view json_text, const std::vector<std::string>& overrides,
                          const std::filesystem::path& base_dir) {
  try {
    json doc = json_text.empty() ? json::object() : json::parse(json_text);
    for (const auto& o : overrides) apply_override(doc, o);
    check_keys(doc, spec_to_json(ExperimentSpec{}), "");
    ExperimentSpec spec = spec_from_json(doc, base_dir);
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentSpec load_spec(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  // Curve files carry their config on a "# config: {...}" header line.
  if (text.rfind("# ", 0) == 0) {
    std::istringstream lines(text);
    std::string line;
    std::string found;
    while (std::getline(lines, line) && line.rfind("# ", 0) == 0) {
      if (line.rfind("# config: ", 0) == 0) {
        found = line.substr(10);
        break;
      }
    }
    if (found.empty()) throw ConfigError("'" + path.string() + "' has no config header line");
    text = found;
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_spec(text, overrides, base);
}

void validate(const ExperimentSpec& s) {
  const RunConfig& c = s.run;
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw ConfigError("run.alpha must be finite and >= 0");
  if (!(c.sigma0 > 0.0)) throw ConfigError("run.sigma0 must be positive");
  if (c.prior_sigma && !(*c.prior_sigma > 0.0)) throw ConfigError("run.prior_sigma must be positive");
  if (!(c.g0 >= 0.0)) throw ConfigError("run.g0 must be >= 0");
  if (c.probes_per_step < 1) throw ConfigError("run.probes_per_step must be >= 1");
  if (s.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (s.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(s.tolerance_scale >= 0.0)) throw ConfigError("tolerance_scale must be >= 0");
  if (s.out_dir.empty()) throw ConfigError("out_dir must not be empty");

  const bool needs_data = s.model.type == ModelType::mlp || s.model.type == ModelType::bayes_linear_regression;
  if (s.kind != ExperimentKind::oracle_check) {
    if (needs_data && s.data.source == DataSource::none)
      throw ConfigError("model '" + std::string(name_of(kModels, s.model.type)) + "' needs a data source");
    if (!needs_data && s.data.source != DataSource::none)
      throw ConfigError("model '" + std::string(name_of(kModels, s.model.type)) + "' takes no data");
  }
  if (s.model.type == ModelType::mlp && s.model.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (s.model.type != ModelType::quadratic &&
      (s.model.quadratic_a.size() > 0 || s.model.quadratic_mu.size() > 0))
    throw ConfigError("model.a and model.mu apply to the quadratic model only");
  if (s.model.type == ModelType::quadratic && s.kind != ExperimentKind::oracle_check) {
    const auto& a = s.model.quadratic_a;
    if (a.size() == 0) throw ConfigError("quadratic model needs model.a");
    if (a.rows() != a.cols()) throw ConfigError("model.a must be square");
    if (s.model.quadratic_mu.size() != 0 && s.model.quadratic_mu.size() != a.rows())
      throw ConfigError("model.mu must have the dimension of model.a");
  }
  if (s.data.source == DataSource::delimited && s.data.path.empty())
    throw ConfigError("delimited data needs data.path");
  if (s.data.source == DataSource::idx && (s.data.images.empty() || s.data.labels.empty()))
    throw ConfigError("idx data needs data.images and data.labels");
  if (!(s.data.train_fraction > 0.0 && s.data.train_fraction <= 1.0))
    throw ConfigError("data.train_fraction must lie in (0, 1]");

  if (s.kind == ExperimentKind::sweep) {
    if (s.sweep.values.empty()) throw ConfigError("sweep grid must not be empty");
    for (double v : s.sweep.values) {
      if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
      if (s.sweep.parameter == SweepParameter::hidden && (v < 1.0 || v != std::floor(v)))
        throw ConfigError("hidden-unit sweep values must be positive integers");
      if (s.sweep.parameter == SweepParameter::hidden && s.model.type != ModelType::mlp)
        throw ConfigError("hidden-unit sweeps need the mlp model");
      if (s.sweep.parameter == SweepParameter::g0 && v < 0.0) throw ConfigError("g0 sweep values must be >= 0");
      if (s.sweep.parameter == SweepParameter::alpha && v < 0.0) throw ConfigError("alpha sweep values must be >= 0");
      if (s.sweep.parameter == SweepParameter::sigma0 && v <= 0.0)
        throw ConfigError("sigma0 sweep values must be positive");
    }
  }
  if (s.kind == ExperimentKind::particles_2d) {
    const bool two_d = s.model.type == ModelType::mixture2d ||
                       (s.model.type == ModelType::quadratic && s.model.quadratic_a.rows() == 2);
    if (!two_d) throw ConfigError("particles-2d needs a two-dimensional objective (mixture2d or a 2x2 quadratic)");
    if (s.particles.count < 2) throw ConfigError("particles.count must be >= 2");
    if (!(s.particles.g0 >= 0.0)) throw ConfigError("particles.g0 must be >= 0");
  }
  if (s.kind == ExperimentKind::ensemble && s.members < 1) throw ConfigError("members must be >= 1");
}

}  // namespace sgdvi
