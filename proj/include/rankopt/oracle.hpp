#pragma once

// Definition-level reference implementations. Each one recomputes its
// quantity from first principles (enumeration, direct counting, finite
// differences) and shares no code path with the production routines it is
// used to check.

#include "rankopt/inference.hpp"
#include "rankopt/metrics.hpp"
#include "rankopt/scoring.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rankopt::oracle {

// AP by recounting Prec@j from scratch at every relevant position.
// Returns NaN when the query has no relevant point.
double average_precision(std::span<const Index> order, std::span<const ClassId> labels,
                         Index query);

// Augmented objective of an arbitrary full order over P u N, computed from
// the pairwise definition of F and the AP definition.
double full_order_value(const CanonicalQuery& cq, std::span<const Index> order,
                        const AugmentedObjective& objective);

struct BruteForceResult {
  Interleaving best;
  double value = 0.0;
  std::size_t enumerated = 0;
};

inline constexpr Index kMaxBruteForceCandidates = 16;
inline constexpr Index kMaxFullPermutationCandidates = 7;

// Enumerates every interleaving in lexicographic order of its positions and
// keeps the first maximum. Throws ContractError above 16 candidates.
BruteForceResult brute_force_augmented(const CanonicalQuery& cq, const AugmentedObjective& objective);

// Best augmented objective over all (|P|+|N|)! permutations, ignoring the
// canonical within-block order. Throws ContractError above 7 candidates.
double best_full_permutation(const CanonicalQuery& cq, const AugmentedObjective& objective);

// Smallest nonzero gap between F values of distinct interleavings.
double min_score_gap(const CanonicalQuery& cq);

// All line placements (6 orders x 2 unequal gap patterns) meeting the constraints.
std::vector<LineWitness> consistency_witnesses(const TripleConstraints& c);

// Central differences of f around w, one coordinate at a time.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& w, double h);

// Straight-line forward pass: affine map then rectifier for each hidden layer,
// read directly out of the flat weight vector.
Eigen::VectorXd embed(const std::vector<Index>& dims, const Eigen::VectorXd& weights,
                      const Eigen::VectorXd& x);

}  // namespace rankopt::oracle
