#pragma once

// File formats for the graph structure learning experiment.
//
// Dataset and parameter snapshots share one JSON layout:
//   format_version   integer, currently 1
//   kind             "dataset" | "params"
//   config           GslConfig object (see config_to_json)
//   seed             integer
//   theta_star_mask  n x n array of 0/1; 1 marks an edge that may exist
//   theta_star       true edge probability on the mask
//   scores           per-edge scores in row-major mask order (null for datasets)
//   W                d_in x d_out array (generating W* for datasets)
// Datasets additionally carry `samples` ([{x, y}]) and `splits`
// ({train, val, test} index lists).
//
// Metrics are CSV with header `epoch,split,es_loss,pp_mae,pp_mse,mae_theta`,
// 17 significant digits and LF line endings.

#include <filesystem>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "catnat/gsl.hpp"

namespace catnat::gsl {

inline constexpr int kFormatVersion = 1;

nlohmann::json config_to_json(const GslConfig& cfg);
// Fills `out` from `j` (missing keys keep their defaults) and returns one
// message per invalid or unknown field, including semantic validation.
std::vector<std::string> parse_config(const nlohmann::json& j, GslConfig& out);
// Throws InvalidArgument listing every problem found by parse_config.
GslConfig config_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);

struct Snapshot {
  GslConfig config;
  BernoulliGraphParams params;
  LinearGraphModel model;
};

nlohmann::json params_to_json(const GslConfig& cfg, const Eigen::VectorXd& theta_star,
                              const BernoulliGraphParams& params, const LinearGraphModel& model);
Snapshot params_from_json(const nlohmann::json& j);

std::string format_double(double value);
std::string metrics_csv(std::span<const EpochRecord> records);
std::string summary_line(const GslMetrics& metrics);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace catnat::gsl
