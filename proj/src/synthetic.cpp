#include "igraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "igraph/error.hpp"

namespace igraph::rec {

PlantedData make_planted_ratings(HyperParams hyper, const PlantedOptions& options,
                                 std::uint64_t seed) {
  hyper.num_users = options.num_users;
  hyper.num_items = options.num_items;
  hyper.validate();
  const std::size_t pairs = options.num_users * options.num_items;
  if (options.num_observations == 0 || options.num_observations > pairs) {
    throw ConfigError("num_observations must lie in [1, num_users*num_items]");
  }
  if (!(options.noise >= 0.0)) throw ConfigError("noise must be non-negative");

  std::mt19937_64 rng(seed);
  PlantedData out{hyper, init_params(hyper, rng(), {options.embed_stddev, options.tau_stddev, 1.0}),
                  {}};
  std::uniform_real_distribution<double> omega(options.omega_low, options.omega_high);
  for (const char* name : {names::kOmegaUser, names::kOmegaItem}) {
    for (double& v : out.truth.at(name).data()) v = omega(rng);
  }

  for (std::size_t u = 0; u < options.num_users; ++u) out.ratings.users.intern("u" + std::to_string(u + 1));
  for (std::size_t t = 0; t < options.num_items; ++t) out.ratings.items.intern("i" + std::to_string(t + 1));

  std::vector<std::size_t> cells(pairs);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(options.num_observations);
  std::sort(cells.begin(), cells.end());

  std::normal_distribution<double> noise(0.0, options.noise);
  const double top = static_cast<double>(hyper.num_ratings);
  std::int64_t clock = 0;
  for (std::size_t cell : cells) {
    const std::size_t u = cell / options.num_items;
    const std::size_t t = cell % options.num_items;
    const double clean = std::round(predict(out.truth, hyper, u, t));
    const double value = std::clamp(clean + noise(rng), 1.0, top);
    out.ratings.entries.push_back({u, t, value, ++clock});
  }
  return out;
}

}  // namespace igraph::rec
