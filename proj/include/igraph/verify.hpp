#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace igraph::verify {

struct CheckResult {
  std::string suite;
  bool passed = false;
  // Worst observed error (or violation count) against the suite's tolerance.
  double worst = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  double seconds = 0.0;
  std::vector<std::string> failures;
};

struct Options {
  std::uint64_t seed = 20240611;
  std::size_t gradient_points = 20;
  std::size_t random_graphs = 100;
  std::size_t mixture_draws = 50;
  std::size_t bound_samples = 1000;
  std::size_t gate_samples = 1000;
};

// Analytic vs central-difference gradients (ε=1e-5, rel 1e-4) for every op
// kind at `gradient_points` random smooth points each.
CheckResult op_gradients(const Options& opts);
// Same check on the full recommender MSE loss for every parameter group of
// a tiny instance (|U|=|T|=3, k=2, |F|=|C|=2, |R|=5).
CheckResult recommender_gradients(const Options& opts);
// Classification loss gradients reach every demo parameter group.
CheckResult textclf_gradients(const Options& opts);
// marginal() vs brute-force enumeration on random forests, max abs 1e-10.
CheckResult sum_product_exactness(const Options& opts);
// preference_distribution vs an independent triple sum, 1e-10.
CheckResult mixture_oracle(const Options& opts);
// Stochasticity within 1e-9, expected_rating ∈ [1,|R|], constant p̂ → (|R|+1)/2.
CheckResult normalization_bounds(const Options& opts);
// diversity_adjust bit-identity off-band and with a zero network.
CheckResult diversity_gate(const Options& opts);

std::vector<CheckResult> run_all(const Options& opts = {});

}  // namespace igraph::verify
