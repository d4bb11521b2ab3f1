#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "igraph/autodiff.hpp"
#include "igraph/data.hpp"
#include "igraph/recommender.hpp"

namespace igraph {

inline constexpr int kCheckpointFormatVersion = 1;

// {"format_version":1, "hyper":{...}, "params":{id: {"shape":[...], "data":[...]}},
//  "vocab":{"users":[...], "items":[...]}}
struct Checkpoint {
  rec::HyperParams hyper;
  ParameterStore params;
  Vocabulary users;
  Vocabulary items;
};

nlohmann::ordered_json hyper_to_json(const rec::HyperParams& hp);
// Throws LoadError on missing, unknown, or mistyped fields.
rec::HyperParams hyper_from_json(const nlohmann::json& j);

nlohmann::ordered_json checkpoint_to_json(const Checkpoint& ckpt);
// Validates every parameter shape against the hyper-parameters and the
// vocabulary sizes against num_users/num_items before accepting.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the bytes; printed by the CLI so reruns can be compared.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::uint64_t digest);

}  // namespace igraph
