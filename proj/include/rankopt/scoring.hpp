#pragma once

#include "rankopt/metrics.hpp"
#include "rankopt/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <vector>

namespace rankopt {

// Lower bound on embedding norms, so that zero embeddings give similarity 0
// instead of NaN.
inline constexpr double kNormFloor = 1e-12;

template <typename Scalar>
Scalar floored_norm(Scalar n) {
  return std::max(n, Scalar(kNormFloor));
}

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine(const Eigen::MatrixBase<DerivedU>& u,
                                 const Eigen::MatrixBase<DerivedV>& v) {
  return u.dot(v) / (floored_norm(u.norm()) * floored_norm(v.norm()));
}

// d cosine(u, v) / du. Below the norm floor the denominator is constant in u.
template <typename DerivedU, typename DerivedV>
Eigen::Matrix<typename DerivedU::Scalar, Eigen::Dynamic, 1> cosine_gradient(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using S = typename DerivedU::Scalar;
  const S nu = floored_norm(u.norm()), nv = floored_norm(v.norm());
  Eigen::Matrix<S, Eigen::Dynamic, 1> g = v / (nu * nv);
  if (u.norm() > S(kNormFloor)) g -= (u.dot(v) / (nu * nv * nu * nu)) * u;
  return g;
}

template <typename Scalar>
Scalar similarity(const EmbeddingModel<Scalar>& model,
                  const Eigen::Ref<const typename EmbeddingModel<Scalar>::Vector>& query,
                  const Eigen::Ref<const typename EmbeddingModel<Scalar>::Vector>& candidate) {
  return cosine(model.embed(query), model.embed(candidate));
}

// Cosine of every embedding column against column `query` (the query's own
// entry is included but never used as a candidate).
Eigen::VectorXd query_similarities(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                                   Index query);

struct QueryDecomposition {
  Index query_index = 0;
  std::vector<Index> positives;
  std::vector<Index> negatives;
};

// Pairwise ranking variables over positives x negatives: y(a, b) = +1 when
// positives[a] is ranked above negatives[b], -1 otherwise.
struct PairwiseRanking {
  Index query_index = 0;
  std::vector<Index> positives;
  std::vector<Index> negatives;
  Eigen::MatrixXi y;

  PairwiseRanking flipped() const {
    PairwiseRanking r = *this;
    r.y = -y;
    return r;
  }
};

// P and N for one query; P may be empty for singleton classes.
QueryDecomposition decompose_query(std::span<const ClassId> labels, Index query);

// One decomposition per point with at least one same-class partner.
std::vector<QueryDecomposition> decompose_batch(const LabeledBatch& batch);

// y_ij = sign(phi_i - phi_j), ties resolved to +1.
PairwiseRanking ranking_from_similarity(const QueryDecomposition& decomp,
                                        const Eigen::Ref<const Eigen::VectorXd>& sims);

// F = 1/(|P||N|) * sum_{i in P, j in N} y_ij (phi_i - phi_j).
// `sims` is indexed by batch position. Throws EmptySide.
double score(const QueryDecomposition& decomp, const PairwiseRanking& ranking,
             const Eigen::Ref<const Eigen::VectorXd>& sims);

// Per-candidate coefficients c with F = sum_c c[c] * phi_c, indexed by batch
// position (zero for the query and for points outside P and N).
Eigen::VectorXd score_coefficients(const PairwiseRanking& ranking, Index batch_size);

// Joint rankings for two same-class points i, k and one other-class point j.
// Only y^i_{kj} (from i's view, is k above j?) and y^k_{ij} are ever scored.
struct TripleConstraints {
  int i_view_k_over_j = 1;
  int k_view_i_over_j = 1;
};

enum class TriplePoint { I = 0, J = 1, K = 2 };

// Placement of the three points on a line; rank from a point's view is by
// distance along the line.
struct LineWitness {
  std::array<TriplePoint, 3> order{};  // left to right
  std::array<double, 3> coordinate{};  // indexed by TriplePoint
};

bool satisfies(const LineWitness& w, const TripleConstraints& c);

// Throws ContractError for constraint values other than +1 / -1.
LineWitness consistency_check(const TripleConstraints& c);

}  // namespace rankopt
