#pragma once

#include <cstddef>
#include <cstdint>

#include "igraph/autodiff.hpp"
#include "igraph/data.hpp"
#include "igraph/recommender.hpp"

namespace igraph::rec {

// Ratings drawn from a random instance of the model itself:
// clamp(round(predict(u,t)) + N(0, noise²), 1, |R|) on distinct (u,t) pairs.
struct PlantedOptions {
  std::size_t num_users = 100;
  std::size_t num_items = 80;
  std::size_t num_observations = 2000;
  double noise = 0.1;
  // Spread of the ground-truth parameters. The model's training init is
  // deliberately narrow; a planted instance that narrow predicts ≈ (|R|+1)/2
  // everywhere and carries no signal.
  double embed_stddev = 1.0;
  double tau_stddev = 2.0;
  double omega_low = 1.5;
  double omega_high = 3.5;
};

struct PlantedData {
  HyperParams hyper;
  ParameterStore truth;
  RatingsDataset ratings;
};

// `hyper` supplies everything except num_users/num_items, which come from
// the options.
PlantedData make_planted_ratings(HyperParams hyper, const PlantedOptions& options,
                                 std::uint64_t seed);

}  // namespace igraph::rec
