#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "igraph/recommender.hpp"
#include "igraph/train.hpp"

namespace igraph {

// Everything a `train` run needs. num_users/num_items in `hyper` are filled
// from the data at run time.
struct RunConfig {
  rec::HyperParams hyper;
  bool diversity_enabled = true;
  train::TrainOptions train;
  double test_fraction = 0.2;
  std::filesystem::path data_path;
  std::filesystem::path checkpoint_path;
  std::optional<std::filesystem::path> log_path;
};

// Required keys: data_path checkpoint_path k num_features num_categories
// num_ratings sigma. Unknown keys, wrong types and range violations raise
// ConfigError naming the key. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace igraph
