#include "catnat/gsl_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "catnat/error.hpp"

namespace catnat::gsl {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw Error(ErrorKind::BadShape, std::string(what) + " must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw Error(ErrorKind::BadShape, std::string(what) + " rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json mask_to_json(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> mask(n, std::vector<int>(n, 0));
  for (const auto& [i, j] : edges) mask[i][j] = 1;
  return mask;
}

std::vector<Edge> mask_from_json(const json& j) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < j.size(); ++i) {
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      if (j[i][c].get<int>() != 0) edges.emplace_back(i, c);
    }
  }
  return edges;
}

void check_header(const json& j, const char* kind) {
  if (!j.is_object() || j.value("format_version", -1) != kFormatVersion) {
    throw Error(ErrorKind::InvalidArgument, "unsupported or missing format_version");
  }
  if (j.value("kind", std::string{}) != kind) {
    throw Error(ErrorKind::InvalidArgument, std::string("expected a '") + kind + "' file");
  }
}

template <typename T>
bool read_unsigned(const json& v, T& out) {
  if (!v.is_number_integer() || v.get<long long>() < 0) return false;
  out = static_cast<T>(v.get<unsigned long long>());
  return true;
}

bool read_real(const json& v, double& out) {
  if (!v.is_number()) return false;
  out = v.get<double>();
  return true;
}

}  // namespace

json config_to_json(const GslConfig& cfg) {
  return json{
      {"n_nodes", cfg.n_nodes},
      {"n_communities", cfg.n_communities},
      {"theta_star", cfg.theta_star},
      {"d_in", cfg.d_in},
      {"d_out", cfg.d_out},
      {"n_samples", cfg.n_samples},
      {"split", {cfg.split[0], cfg.split[1], cfg.split[2]}},
      {"M", cfg.M},
      {"batch_size", cfg.batch_size},
      {"M_eval", cfg.M_eval},
      {"lr_theta", cfg.lr_theta},
      {"lr_w", cfg.lr_w},
      {"epochs", cfg.epochs},
      {"seed", cfg.seed},
      {"parameterization", cfg.parameterization == ActivationKind::Natural ? "natural" : "sigmoid"},
  };
}

std::vector<std::string> parse_config(const json& j, GslConfig& out) {
  std::vector<std::string> errors;
  if (!j.is_object()) {
    errors.emplace_back("config: must be a JSON object");
    return errors;
  }
  auto bad = [&](const std::string& key, const char* why) { errors.push_back(key + ": " + why); };
  for (const auto& [key, v] : j.items()) {
    if (key == "n_nodes") {
      if (!read_unsigned(v, out.n_nodes)) bad(key, "must be a non-negative integer");
    } else if (key == "n_communities") {
      if (!read_unsigned(v, out.n_communities)) bad(key, "must be a non-negative integer");
    } else if (key == "d_in") {
      if (!read_unsigned(v, out.d_in)) bad(key, "must be a non-negative integer");
    } else if (key == "d_out") {
      if (!read_unsigned(v, out.d_out)) bad(key, "must be a non-negative integer");
    } else if (key == "n_samples") {
      if (!read_unsigned(v, out.n_samples)) bad(key, "must be a non-negative integer");
    } else if (key == "M") {
      if (!read_unsigned(v, out.M)) bad(key, "must be a non-negative integer");
    } else if (key == "batch_size") {
      if (!read_unsigned(v, out.batch_size)) bad(key, "must be a non-negative integer");
    } else if (key == "M_eval") {
      if (!read_unsigned(v, out.M_eval)) bad(key, "must be a non-negative integer");
    } else if (key == "epochs") {
      if (!read_unsigned(v, out.epochs)) bad(key, "must be a non-negative integer");
    } else if (key == "seed") {
      if (!read_unsigned(v, out.seed)) bad(key, "must be a non-negative integer");
    } else if (key == "theta_star") {
      if (!read_real(v, out.theta_star)) bad(key, "must be a number");
    } else if (key == "lr_theta") {
      if (!read_real(v, out.lr_theta)) bad(key, "must be a number");
    } else if (key == "lr_w") {
      if (!read_real(v, out.lr_w)) bad(key, "must be a number");
    } else if (key == "split") {
      if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
        bad(key, "must be [train, val, test] fractions");
      } else {
        for (std::size_t i = 0; i < 3; ++i) out.split[i] = v[i].get<double>();
      }
    } else if (key == "parameterization") {
      const std::string name = v.is_string() ? v.get<std::string>() : "";
      if (name == "natural" || name == "catnat-natural") {
        out.parameterization = ActivationKind::Natural;
      } else if (name == "sigmoid" || name == "catnat-sigmoid") {
        out.parameterization = ActivationKind::Sigmoid;
      } else {
        bad(key, "must be \"sigmoid\" or \"natural\"");
      }
    } else {
      bad(key, "unknown field");
    }
  }
  // Semantic checks only for fields that parsed.
  std::set<std::string> already;
  for (const auto& e : errors) already.insert(e.substr(0, e.find(':')));
  for (auto& e : out.validation_errors()) {
    if (!already.contains(e.substr(0, e.find(':')))) errors.push_back(std::move(e));
  }
  return errors;
}

GslConfig config_from_json(const json& j) {
  GslConfig cfg;
  const auto errors = parse_config(j, cfg);
  if (!errors.empty()) {
    std::ostringstream msg;
    for (std::size_t i = 0; i < errors.size(); ++i) msg << (i ? "; " : "") << errors[i];
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  return cfg;
}

json dataset_to_json(const Dataset& data) {
  json samples = json::array();
  for (const auto& s : data.samples) samples.push_back({{"x", matrix_to_json(s.x)}, {"y", matrix_to_json(s.y)}});
  return json{
      {"format_version", kFormatVersion},
      {"kind", "dataset"},
      {"config", config_to_json(data.config)},
      {"seed", data.config.seed},
      {"theta_star_mask", mask_to_json(data.config.n_nodes, data.edges)},
      {"theta_star", data.config.theta_star},
      {"scores", nullptr},
      {"W", matrix_to_json(data.W_star)},
      {"samples", std::move(samples)},
      {"splits", {{"train", data.train}, {"val", data.val}, {"test", data.test}}},
  };
}

Dataset dataset_from_json(const json& j) {
  check_header(j, "dataset");
  Dataset data;
  data.config = config_from_json(j.at("config"));
  data.edges = mask_from_json(j.at("theta_star_mask"));
  data.theta_star =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.edges.size()), j.at("theta_star").get<double>());
  data.W_star = matrix_from_json(j.at("W"), "W");
  for (const auto& s : j.at("samples")) {
    data.samples.push_back({matrix_from_json(s.at("x"), "x"), matrix_from_json(s.at("y"), "y")});
  }
  const auto& splits = j.at("splits");
  data.train = splits.at("train").get<std::vector<std::size_t>>();
  data.val = splits.at("val").get<std::vector<std::size_t>>();
  data.test = splits.at("test").get<std::vector<std::size_t>>();
  for (const auto* part : {&data.train, &data.val, &data.test}) {
    for (std::size_t idx : *part) {
      if (idx >= data.samples.size()) throw Error(ErrorKind::OutOfRange, "split index beyond sample count");
    }
  }
  return data;
}

json params_to_json(const GslConfig& cfg, const Eigen::VectorXd& theta_star, const BernoulliGraphParams& params,
                    const LinearGraphModel& model) {
  return json{
      {"format_version", kFormatVersion},
      {"kind", "params"},
      {"config", config_to_json(cfg)},
      {"seed", cfg.seed},
      {"theta_star_mask", mask_to_json(params.n_nodes, params.edges)},
      {"theta_star", theta_star.size() > 0 ? theta_star[0] : cfg.theta_star},
      {"scores", std::vector<double>(params.scores.data(), params.scores.data() + params.scores.size())},
      {"W", matrix_to_json(model.W)},
  };
}

Snapshot params_from_json(const json& j) {
  check_header(j, "params");
  Snapshot snap;
  snap.config = config_from_json(j.at("config"));
  snap.params.n_nodes = snap.config.n_nodes;
  snap.params.edges = mask_from_json(j.at("theta_star_mask"));
  snap.params.act = snap.config.activation();
  const auto scores = j.at("scores").get<std::vector<double>>();
  if (scores.size() != snap.params.edges.size()) {
    throw Error(ErrorKind::ShapeMismatch, "scores must have one entry per masked edge");
  }
  snap.params.scores = Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
  snap.model.W = matrix_from_json(j.at("W"), "W");
  return snap;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string metrics_csv(std::span<const EpochRecord> records) {
  std::string out = "epoch,split,es_loss,pp_mae,pp_mse,mae_theta\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + r.split + "," + format_double(r.metrics.es_loss) + "," +
           format_double(r.metrics.pp_mae) + "," + format_double(r.metrics.pp_mse) + "," +
           format_double(r.metrics.mae_theta) + "\n";
  }
  return out;
}

std::string summary_line(const GslMetrics& m) {
  return "es_loss=" + format_double(m.es_loss) + " pp_mae=" + format_double(m.pp_mae) +
         " pp_mse=" + format_double(m.pp_mse) + " mae_theta=" + format_double(m.mae_theta);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

json read_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace catnat::gsl
