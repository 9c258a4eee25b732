#pragma once

#include "rankopt/metrics.hpp"
#include "rankopt/scoring.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rankopt {

// A query's candidates with each block sorted by descending similarity
// (ascending batch index on ties). Rankings over this query only vary in how
// the two blocks interleave.
struct CanonicalQuery {
  Index query_index = 0;
  std::vector<Index> positives;
  std::vector<Index> negatives;
  Eigen::VectorXd positive_sims;
  Eigen::VectorXd negative_sims;

  Index num_positives() const { return static_cast<Index>(positives.size()); }
  Index num_negatives() const { return static_cast<Index>(negatives.size()); }
};

// Throws EmptySide if either block is empty.
CanonicalQuery canonicalize(const QueryDecomposition& decomp,
                            const Eigen::Ref<const Eigen::VectorXd>& sims);

// positions[i] is the 0-based rank, among all |P|+|N| candidates, of the i-th
// canonical positive. Strictly increasing.
struct Interleaving {
  Index query_index = 0;
  std::vector<Index> positions;

  bool operator==(const Interleaving&) const = default;
};

enum class InferenceMode { Standard, Hinge, DirectPositive, DirectNegative };

const char* to_string(InferenceMode mode);

// Objective maximized over interleavings:
//   Standard        F
//   Hinge           F + L
//   DirectPositive  F + epsilon * L
//   DirectNegative  F - epsilon * L
// with L = 1 - AP.
struct AugmentedObjective {
  InferenceMode mode = InferenceMode::Standard;
  double epsilon = 1.0;

  double loss_weight() const;
  void validate() const;
};

// Throws ContractError unless `il` is a strictly increasing set of in-range ranks.
void validate(const CanonicalQuery& cq, const Interleaving& il);

Interleaving ground_truth(const CanonicalQuery& cq);

PairwiseRanking to_pairwise(const CanonicalQuery& cq, const Interleaving& il);
RankOrder to_rank_order(const CanonicalQuery& cq, const Interleaving& il);

double interleaving_score(const CanonicalQuery& cq, const Interleaving& il);
double interleaving_ap(const CanonicalQuery& cq, const Interleaving& il);
double augmented_value(const CanonicalQuery& cq, const Interleaving& il,
                       const AugmentedObjective& objective);

// y_w: the ranking by descending similarity, ascending index on ties.
Interleaving standard_inference(const CanonicalQuery& cq);

// Exact argmax of `objective` over all interleavings in O(|P||N|) time.
// Among exact ties the lexicographically smallest positions vector wins.
Interleaving loss_augmented_inference(const CanonicalQuery& cq,
                                      const AugmentedObjective& objective);

}  // namespace rankopt
