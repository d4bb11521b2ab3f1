#include "igraph/config.hpp"

#include <fstream>
#include <set>

#include "igraph/error.hpp"

namespace igraph {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kKnownKeys{
    "data_path",       "checkpoint_path", "log_path",        "k",
    "num_features",    "num_categories",  "num_ratings",     "sigma",
    "diversity_enabled", "diversity_lower", "diversity_upper", "category_hidden",
    "feature_hidden",  "diversity_hidden", "learning_rate",  "beta1",
    "beta2",           "adam_epsilon",    "epochs",          "batch_size",
    "seed",            "test_fraction"};

const std::set<std::string, std::less<>> kRequiredKeys{
    "data_path", "checkpoint_path", "k", "num_features", "num_categories", "num_ratings", "sigma"};

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  bool ok = true;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    ok = v.is_string();
  }
  if (!ok) throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  out = v.get<T>();
}

void read_widths(const json& j, const char* key, std::vector<std::size_t>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
  out.clear();
  for (const json& w : v) {
    if (!w.is_number_integer() || w.get<long long>() <= 0) {
      throw ConfigError(std::string("config key '") + key + "' must hold positive integers");
    }
    out.push_back(w.get<std::size_t>());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path;
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  for (const auto& key : kRequiredKeys) {
    if (!j.contains(key)) throw ConfigError("missing required config key '" + key + "'");
  }

  RunConfig cfg;
  rec::HyperParams& hp = cfg.hyper;
  std::string data_path, checkpoint_path, log_path;
  read(j, "data_path", data_path);
  read(j, "checkpoint_path", checkpoint_path);
  read(j, "log_path", log_path);
  read(j, "k", hp.k);
  read(j, "num_features", hp.num_features);
  read(j, "num_categories", hp.num_categories);
  read(j, "num_ratings", hp.num_ratings);
  read(j, "sigma", hp.sigma);
  read(j, "diversity_enabled", cfg.diversity_enabled);
  read(j, "diversity_lower", hp.diversity_lower);
  read(j, "diversity_upper", hp.diversity_upper);
  read_widths(j, "category_hidden", hp.category_hidden);
  read_widths(j, "feature_hidden", hp.feature_hidden);
  read_widths(j, "diversity_hidden", hp.diversity_hidden);
  read(j, "learning_rate", cfg.train.adam.learning_rate);
  read(j, "beta1", cfg.train.adam.beta1);
  read(j, "beta2", cfg.train.adam.beta2);
  read(j, "adam_epsilon", cfg.train.adam.epsilon);
  read(j, "epochs", cfg.train.epochs);
  read(j, "batch_size", cfg.train.batch_size);
  read(j, "seed", cfg.train.seed);
  read(j, "test_fraction", cfg.test_fraction);

  if (data_path.empty()) throw ConfigError("config key 'data_path' must not be empty");
  if (checkpoint_path.empty()) throw ConfigError("config key 'checkpoint_path' must not be empty");
  cfg.data_path = resolve(base_dir, data_path);
  cfg.checkpoint_path = resolve(base_dir, checkpoint_path);
  if (!log_path.empty()) cfg.log_path = resolve(base_dir, log_path);

  auto positive = [&](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string("config key '") + key + "' must be positive");
  };
  positive(hp.k, "k");
  positive(hp.num_features, "num_features");
  positive(hp.num_categories, "num_categories");
  if (hp.num_ratings < 2) throw ConfigError("config key 'num_ratings' must be at least 2");
  if (!(hp.sigma > 0.0)) throw ConfigError("config key 'sigma' must be positive");
  positive(cfg.train.epochs, "epochs");
  positive(cfg.train.batch_size, "batch_size");
  if (!(cfg.train.adam.learning_rate >= 0.0)) {
    throw ConfigError("config key 'learning_rate' must be nonnegative");
  }
  if (!(cfg.train.adam.beta1 >= 0.0 && cfg.train.adam.beta1 < 1.0)) {
    throw ConfigError("config key 'beta1' must lie in [0, 1)");
  }
  if (!(cfg.train.adam.beta2 >= 0.0 && cfg.train.adam.beta2 < 1.0)) {
    throw ConfigError("config key 'beta2' must lie in [0, 1)");
  }
  if (!(cfg.train.adam.epsilon > 0.0)) throw ConfigError("config key 'adam_epsilon' must be positive");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw ConfigError("config key 'test_fraction' must lie strictly between 0 and 1");
  }
  if (cfg.diversity_enabled) {
    if (!(hp.diversity_lower >= 1.0 && hp.diversity_lower <= hp.diversity_upper &&
          hp.diversity_upper <= static_cast<double>(hp.num_ratings))) {
      throw ConfigError(
          "config keys 'diversity_lower'/'diversity_upper' must satisfy 1 <= lower <= upper <= "
          "num_ratings");
    }
  } else {
    hp.disable_diversity();
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

}  // namespace igraph
