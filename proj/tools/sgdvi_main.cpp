// Command-line driver for the experiment runners.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgdvi/errors.hpp"
#include "sgdvi/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("-c,--config", opt.config,
                  "JSON experiment file, or a curve file whose '# config:' header is re-run");
  cmd->add_option("-s,--set", opt.overrides,
                  "Override one config value, e.g. --set run.alpha=0.001 --set model.hidden=30 (repeatable)");
  cmd->add_option("-o,--out", opt.out, "Output directory (config key out_dir)");
  cmd->add_option("--seed", opt.seed, "Initialization seed of the first run (config key run.seed_init)");
  cmd->add_option("-j,--threads", opt.threads, "Worker threads for repeats, sweep points and ensemble members");
}

int run(sgdvi::ExperimentKind kind, const Options& opt) {
  using namespace sgdvi;
  std::vector<std::string> overrides = opt.overrides;
  if (!opt.out.empty()) overrides.push_back("out_dir=" + nlohmann::json(opt.out).dump());
  if (opt.seed) overrides.push_back("run.seed_init=" + std::to_string(*opt.seed));
  if (opt.threads) overrides.push_back("threads=" + std::to_string(*opt.threads));

  ExperimentSpec spec;
  try {
    spec = opt.config.empty() ? parse_spec("", overrides) : load_spec(opt.config, overrides);
    spec.kind = kind;
    validate(spec);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const CommandResult result = run_experiment(spec, std::cerr);
  for (const auto& [key, value] : result.report) std::cout << key << ": " << value << '\n';
  if (result.exit_code != kExitOk)
    for (const auto& f : result.failures) std::cerr << "failed: " << f << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-tracking SGD experiments: training curves with an online lower bound on the\n"
               "log marginal likelihood, hyperparameter sweeps, 2D particle clouds and oracle checks.\n"
               "Exit codes: 0 success, 1 run failure, 2 configuration error. Progress goes to stderr;\n"
               "stdout carries only the summary values also written to <out>/summary.json."};
  app.require_subcommand(1);
  app.set_version_flag("--version", sgdvi::code_version());

  struct Sub {
    const char* name;
    const char* help;
    sgdvi::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"train", "Train and write per-iteration bound curves; reports the bound and test peaks",
       sgdvi::ExperimentKind::train_curve},
      {"sweep", "Grid over one of hidden, g0, alpha, sigma0 (sweep.parameter) with matched seeds",
       sgdvi::ExperimentKind::sweep},
      {"particles2d", "Evolve a cloud of 2D particles with and without the gradient warp",
       sgdvi::ExperimentKind::particles_2d},
      {"oracle-check", "Compare estimators against reference computations; nonzero exit on failure",
       sgdvi::ExperimentKind::oracle_check},
      {"ensemble", "Independent runs and their ensemble predictive log-likelihood",
       sgdvi::ExperimentKind::ensemble},
  };

  Options opt;
  std::optional<sgdvi::ExperimentKind> chosen;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opt);
    const auto kind = s.kind;
    cmd->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sgdvi::kExitConfigError;
  }
  return run(*chosen, opt);
}
