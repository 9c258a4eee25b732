#pragma once

#include "rankopt/inference.hpp"
#include "rankopt/learner.hpp"
#include "rankopt/metrics.hpp"
#include "rankopt/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rankopt {

// Random instance generators shared by selfcheck and the test suites.
namespace random_instance {

// Query 0 plus |P| positives and |N| negatives with similarities uniform in
// [-1, 1]; batch indices are shuffled so blocks do not align with index order.
CanonicalQuery canonical_query(std::mt19937_64& rng, Index positives, Index negatives);

// Labeled batch of size n >= 3 with at least two classes and at least one
// same-class pair.
LabeledBatch labeled_batch(std::mt19937_64& rng, Index n, Index dim, int max_classes);

// Every weight and bias drawn from N(0, 0.25).
Model model(std::mt19937_64& rng, std::vector<Index> dims);

// Uniformly random interleaving of |P| positives among |P|+|N| slots.
Interleaving interleaving(std::mt19937_64& rng, const CanonicalQuery& cq);

}  // namespace random_instance

struct CheckResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  std::string detail;  // first failure, if any

  bool ok() const { return passed == total; }
};

struct SelfcheckOptions {
  std::uint64_t seed = 7;
  std::size_t ap_instances = 200;
  std::size_t inference_instances = 100;   // per mode
  std::size_t permutation_instances = 50;
  std::size_t gradient_instances = 20;
};

CheckResult check_ap_oracle(std::mt19937_64& rng, std::size_t n, Index max_batch, double tol);
CheckResult check_inference_oracle(std::mt19937_64& rng, std::size_t n, InferenceMode mode,
                                   Index max_side, double tol);
CheckResult check_full_permutation(std::mt19937_64& rng, std::size_t n, Index max_total, double tol);
// Finite-difference check of grad F, relative error below `rel_tol` on every
// coordinate with |dF| above `floor`.
CheckResult check_score_gradient(std::mt19937_64& rng, std::size_t n, double h, double rel_tol,
                                 double floor);
CheckResult check_consistency_table();

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options);

}  // namespace rankopt
