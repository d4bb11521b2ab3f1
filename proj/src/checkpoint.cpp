#include "igraph/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "igraph/error.hpp"

namespace igraph {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string>& hyper_keys() {
  static const std::set<std::string> keys{
      "num_users",      "num_items",       "k",               "num_features",
      "num_categories", "num_ratings",     "sigma",           "diversity_lower",
      "diversity_upper", "category_hidden", "feature_hidden", "diversity_hidden"};
  return keys;
}

template <typename T>
T field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw LoadError("checkpoint: missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError("checkpoint: field '" + key + "' has the wrong type");
  }
}

}  // namespace

ordered_json hyper_to_json(const rec::HyperParams& hp) {
  ordered_json j;
  j["num_users"] = hp.num_users;
  j["num_items"] = hp.num_items;
  j["k"] = hp.k;
  j["num_features"] = hp.num_features;
  j["num_categories"] = hp.num_categories;
  j["num_ratings"] = hp.num_ratings;
  j["sigma"] = hp.sigma;
  j["diversity_lower"] = hp.diversity_lower;
  j["diversity_upper"] = hp.diversity_upper;
  j["category_hidden"] = hp.category_hidden;
  j["feature_hidden"] = hp.feature_hidden;
  j["diversity_hidden"] = hp.diversity_hidden;
  return j;
}

rec::HyperParams hyper_from_json(const json& j) {
  if (!j.is_object()) throw LoadError("checkpoint: 'hyper' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!hyper_keys().contains(key)) throw LoadError("checkpoint: unknown hyper field '" + key + "'");
  }
  rec::HyperParams hp;
  hp.num_users = field<std::size_t>(j, "num_users");
  hp.num_items = field<std::size_t>(j, "num_items");
  hp.k = field<std::size_t>(j, "k");
  hp.num_features = field<std::size_t>(j, "num_features");
  hp.num_categories = field<std::size_t>(j, "num_categories");
  hp.num_ratings = field<std::size_t>(j, "num_ratings");
  hp.sigma = field<double>(j, "sigma");
  hp.diversity_lower = field<double>(j, "diversity_lower");
  hp.diversity_upper = field<double>(j, "diversity_upper");
  hp.category_hidden = field<std::vector<std::size_t>>(j, "category_hidden");
  hp.feature_hidden = field<std::vector<std::size_t>>(j, "feature_hidden");
  hp.diversity_hidden = field<std::vector<std::size_t>>(j, "diversity_hidden");
  try {
    hp.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint: invalid hyper-parameters: ") + e.what());
  }
  return hp;
}

ordered_json checkpoint_to_json(const Checkpoint& ckpt) {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["hyper"] = hyper_to_json(ckpt.hyper);
  ordered_json params = ordered_json::object();
  for (const auto& [name, t] : ckpt.params.entries()) {
    params[name] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  j["params"] = std::move(params);
  j["vocab"] = {{"users", ckpt.users.ids()}, {"items", ckpt.items.ids()}};
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object()) throw LoadError("checkpoint: document is not an object");
  if (field<int>(j, "format_version") != kCheckpointFormatVersion) {
    throw LoadError("checkpoint: unsupported format_version");
  }
  Checkpoint ckpt;
  ckpt.hyper = hyper_from_json(j.at("hyper"));
  const json& params = j.contains("params") ? j.at("params") : throw LoadError("checkpoint: missing field 'params'");
  if (!params.is_object()) throw LoadError("checkpoint: 'params' must be an object");
  for (const auto& [name, entry] : params.items()) {
    if (!entry.is_object()) throw LoadError("checkpoint: parameter '" + name + "' is not an object");
    auto shape = field<Shape>(entry, "shape");
    auto data = field<std::vector<double>>(entry, "data");
    if (shape_size(shape) != data.size()) {
      throw LoadError("checkpoint: parameter '" + name + "' has " + std::to_string(data.size()) +
                      " values for shape " + shape_string(shape));
    }
    ckpt.params.add(name, Tensor(std::move(shape), std::move(data)));
  }
  rec::check_shapes(ckpt.params, ckpt.hyper);
  for (const auto& [name, t] : ckpt.params.entries()) {
    if (!t.all_finite()) throw LoadError("checkpoint: parameter '" + name + "' is not finite");
  }
  if (!j.contains("vocab") || !j.at("vocab").is_object()) throw LoadError("checkpoint: missing field 'vocab'");
  ckpt.users = Vocabulary(field<std::vector<std::string>>(j.at("vocab"), "users"));
  ckpt.items = Vocabulary(field<std::vector<std::string>>(j.at("vocab"), "items"));
  if (ckpt.users.size() != ckpt.hyper.num_users || ckpt.items.size() != ckpt.hyper.num_items) {
    throw LoadError("checkpoint: vocabulary sizes do not match num_users/num_items");
  }
  return ckpt;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) { return checkpoint_to_json(ckpt).dump() + "\n"; }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace igraph
