// catnat: FIM inspection, property suites, entropy table and the graph
// structure learning experiment.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "catnat/error.hpp"
#include "catnat/fisher.hpp"
#include "catnat/gsl.hpp"
#include "catnat/gsl_io.hpp"
#include "catnat/param.hpp"
#include "catnat/random.hpp"
#include "catnat/verify.hpp"

namespace fs = std::filesystem;
using namespace catnat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

// A usage error that names the flag at fault.
struct UsageError {
  std::string message;
};

std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_matrix(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      // Collapse -0 so printed matrices stay stable.
      const double v = m(i, j) == 0.0 ? 0.0 : m(i, j);
      std::cout << (j ? "," : "") << fmt(v);
    }
    std::cout << '\n';
  }
}

ScoreVector parse_scores(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !std::isfinite(v)) {
      throw UsageError{"--scores: '" + item + "' is not a finite number"};
    }
    values.push_back(v);
  }
  if (values.empty() || (!text.empty() && text.back() == ',')) {
    throw UsageError{"--scores: expected a comma-separated list of numbers"};
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

struct FimArgs {
  std::string param = "catnat-natural";
  std::string scores;
  std::size_t k = 0;
  bool random = false;
  bool oracle = false;
};

int run_fim(const FimArgs& args, std::uint64_t seed) {
  Parameterization param;
  try {
    param = Parameterization::parse(args.param);
  } catch (const Error& e) {
    throw UsageError{"--param: " + std::string(e.what())};
  }
  ScoreVector s;
  if (!args.scores.empty()) {
    if (args.random || args.k) throw UsageError{"--scores cannot be combined with --k/--random"};
    s = parse_scores(args.scores);
    try {
      (void)param.categories(static_cast<std::size_t>(s.size()));
    } catch (const Error& e) {
      throw UsageError{"--scores: " + std::to_string(s.size()) + " scores do not fit " + param.name() + " (" +
                       e.what() + ")"};
    }
  } else {
    if (!args.random || !args.k) throw UsageError{"--scores or both --k and --random are required"};
    std::size_t n = 0;
    try {
      n = param.score_count(args.k);
    } catch (const Error& e) {
      throw UsageError{"--k: " + std::string(e.what())};
    }
    RandomSource rng(seed);
    s = verify::uniform_scores(static_cast<Eigen::Index>(n), -3.0, 3.0, rng);
    std::cout << "scores\n";
    print_matrix(s.transpose());
  }

  const FisherMatrix analytic = fim_analytic(s, param);
  std::cout << "analytic FIM (" << param.name() << ")\n";
  print_matrix(analytic.entries);
  if (args.oracle) {
    FisherMatrix oracle;
    try {
      oracle = fim_oracle(s, param);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::TooLarge) throw UsageError{"--oracle: " + std::string(e.what())};
      throw;
    }
    std::cout << "oracle FIM\n";
    print_matrix(oracle.entries);
    std::cout << "max_abs_diff," << fmt((analytic.entries - oracle.entries).cwiseAbs().maxCoeff(), "%.3e")
              << '\n';
  }
  return kExitOk;
}

int run_verify(const std::string& suite, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw UsageError{"--trials: must be >= 1"};
  const auto reports = verify::run_suites(suite, trials, seed);
  bool ok = true;
  for (const auto& report : reports) {
    std::cout << "suite " << report.suite << " (trials=" << report.trials << ", seed=" << report.seed << ")\n";
    for (const auto& p : report.properties) {
      std::cout << "  " << (p.passed ? "PASS" : "FAIL") << "  " << p.name << ": max " << fmt(p.max_deviation, "%.4e")
                << " (tol " << fmt(p.tolerance, "%.1e") << ")";
      if (!p.passed && !p.detail.empty()) std::cout << " at " << p.detail;
      std::cout << '\n';
    }
    std::cout << (report.passed() ? "PASS " : "FAIL ") << report.suite << '\n';
    if (!report.passed()) {
      ok = false;
      std::cout << "reproduce with: catnat verify --suite " << report.suite << " --trials " << report.trials
                << " --seed " << report.seed << '\n';
    }
  }
  return ok ? kExitOk : kExitFailed;
}

int run_entropy_table() {
  std::cout << "theta_star,entropy_per_edge\n";
  for (double theta : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    std::cout << fmt(theta, "%g") << ',' << fmt(gsl::entropy_per_edge(theta), "%.2f") << '\n';
  }
  return kExitOk;
}

gsl::GslConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  gsl::GslConfig cfg;
  if (!path.empty()) {
    nlohmann::json j;
    try {
      j = gsl::read_json_file(path);
    } catch (const std::exception& e) {
      throw UsageError{"--config: " + std::string(e.what())};
    }
    const auto errors = gsl::parse_config(j, cfg);
    if (!errors.empty()) {
      std::string msg = "--config: " + path + " is invalid:";
      for (const auto& e : errors) msg += "\n  " + e;
      throw UsageError{msg};
    }
  }
  if (seed) cfg.seed = *seed;
  return cfg;
}

gsl::Dataset load_dataset(const fs::path& path, const std::string& flag) {
  try {
    return gsl::dataset_from_json(gsl::read_json_file(path));
  } catch (const std::exception& e) {
    throw UsageError{flag + ": " + e.what()};
  }
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw UsageError{"--out: cannot create '" + out + "': " + ec.message()};
  return fs::path(out);
}

int run_generate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  const gsl::GslConfig cfg = load_config(config, seed);
  const fs::path dir = prepare_out(out);
  RandomSource rng(cfg.seed, gsl::kDataStream);
  const gsl::Dataset data = gsl::generate_dataset(cfg, rng);
  gsl::write_text_file(dir / "dataset.json", gsl::dataset_to_json(data).dump() + "\n");
  std::cout << "wrote " << (dir / "dataset.json").string() << " (" << data.samples.size() << " samples, "
            << data.edges.size() << " candidate edges)\n";
  return kExitOk;
}

int run_train(const std::string& config, const std::string& out, const std::string& data_path,
              std::optional<std::uint64_t> seed) {
  const gsl::GslConfig cfg = load_config(config, seed);
  const fs::path dir = prepare_out(out);
  gsl::Dataset data;
  if (data_path.empty()) {
    RandomSource rng(cfg.seed, gsl::kDataStream);
    data = gsl::generate_dataset(cfg, rng);
  } else {
    data = load_dataset(data_path, "--data");
    if (data.config.n_nodes != cfg.n_nodes || data.config.n_communities != cfg.n_communities ||
        data.config.d_in != cfg.d_in || data.config.d_out != cfg.d_out) {
      throw UsageError{"--data: dataset shape does not match --config"};
    }
  }
  const gsl::TrainResult result = gsl::train(cfg, data);
  gsl::write_text_file(dir / "params.json",
                       gsl::params_to_json(cfg, data.theta_star, result.params, result.model).dump(2) + "\n");
  gsl::write_text_file(dir / "metrics.csv", gsl::metrics_csv(result.history));
  std::cout << "best_epoch=" << result.best_epoch << ' ' << gsl::summary_line(result.test) << '\n';
  return kExitOk;
}

int run_eval(const std::string& params_path, const std::string& data_path, const std::string& config,
             std::optional<std::uint64_t> seed) {
  if (params_path.empty()) throw UsageError{"--params: required"};
  gsl::Snapshot snap;
  try {
    snap = gsl::params_from_json(gsl::read_json_file(params_path));
  } catch (const std::exception& e) {
    throw UsageError{"--params: " + std::string(e.what())};
  }
  gsl::GslConfig cfg = config.empty() ? snap.config : load_config(config, std::nullopt);
  if (seed) cfg.seed = *seed;
  gsl::Dataset data;
  if (data_path.empty()) {
    RandomSource rng(cfg.seed, gsl::kDataStream);
    data = gsl::generate_dataset(cfg, rng);
  } else {
    data = load_dataset(data_path, "--data");
  }
  if (data.edges != snap.params.edges) throw UsageError{"--data: edge mask differs from --params"};
  RandomSource rng(cfg.seed, gsl::kTestEvalStream);
  const gsl::GslMetrics m = gsl::evaluate(snap.params, snap.model, data, data.test, cfg.M_eval, rng);
  std::cout << gsl::summary_line(m) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catnat: categorical parameterizations with diagonal Fisher information"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed")->envname("CATNAT_SEED");
  };

  FimArgs fim;
  auto* fim_cmd = app.add_subcommand("fim", "print the analytic Fisher information matrix");
  fim_cmd->add_option("--param", fim.param, "softmax | catnat-sigmoid | catnat-natural")->capture_default_str();
  fim_cmd->add_option("--scores", fim.scores, "comma-separated scores");
  fim_cmd->add_option("--k", fim.k, "category count for --random");
  fim_cmd->add_flag("--random", fim.random, "draw scores uniformly from (-3, 3)");
  fim_cmd->add_flag("--oracle", fim.oracle, "also print the enumeration oracle and the max difference");
  add_seed(fim_cmd);

  std::string suite = "all";
  std::size_t trials = 100;
  auto* verify_cmd = app.add_subcommand("verify", "run randomised property suites");
  verify_cmd->add_option("--suite", suite, "fim | kl | grad | param | estimator | all")
      ->check(CLI::IsMember({"fim", "kl", "grad", "param", "estimator", "all"}))
      ->capture_default_str();
  verify_cmd->add_option("--trials", trials, "random trials per property")->capture_default_str();
  add_seed(verify_cmd);

  auto* entropy_cmd = app.add_subcommand("entropy-table", "binary entropy per edge for the reference densities");
  add_seed(entropy_cmd);

  std::string config;
  std::string out = ".";
  std::string data_path;
  std::string params_path;
  auto* gen_cmd = app.add_subcommand("gsl-generate", "generate a synthetic dataset");
  gen_cmd->add_option("--config", config, "GslConfig JSON");
  gen_cmd->add_option("--out", out, "output directory")->capture_default_str();
  add_seed(gen_cmd);

  auto* train_cmd = app.add_subcommand("gsl-train", "train edge scores and W; write params and metrics");
  train_cmd->add_option("--config", config, "GslConfig JSON");
  train_cmd->add_option("--out", out, "output directory")->capture_default_str();
  train_cmd->add_option("--data", data_path, "dataset JSON (generated from the config when omitted)");
  add_seed(train_cmd);

  auto* eval_cmd = app.add_subcommand("gsl-eval", "evaluate a params snapshot on the test split");
  eval_cmd->add_option("--params", params_path, "params JSON written by gsl-train");
  eval_cmd->add_option("--data", data_path, "dataset JSON (regenerated from the config when omitted)");
  eval_cmd->add_option("--config", config, "GslConfig JSON (defaults to the snapshot's config)");
  add_seed(eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fim_cmd->parsed()) return run_fim(fim, seed.value_or(0));
    if (verify_cmd->parsed()) return run_verify(suite, trials, seed.value_or(0));
    if (entropy_cmd->parsed()) return run_entropy_table();
    if (gen_cmd->parsed()) return run_generate(config, out, seed);
    if (train_cmd->parsed()) return run_train(config, out, data_path, seed);
    if (eval_cmd->parsed()) return run_eval(params_path, data_path, config, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
