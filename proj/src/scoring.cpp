#include "rankopt/scoring.hpp"

#include "rankopt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rankopt {

Eigen::VectorXd query_similarities(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                                   Index query) {
  if (query < 0 || query >= embeddings.cols()) throw RangeError("query index out of range");
  Eigen::VectorXd sims(embeddings.cols());
  const auto q = embeddings.col(query);
  for (Index c = 0; c < embeddings.cols(); ++c) sims(c) = cosine(q, embeddings.col(c));
  return sims;
}

QueryDecomposition decompose_query(std::span<const ClassId> labels, Index query) {
  if (query < 0 || static_cast<std::size_t>(query) >= labels.size())
    throw RangeError("decompose_query: query index out of range");
  QueryDecomposition d{query, {}, {}};
  const auto q = static_cast<std::size_t>(query);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (j == q) continue;
    (labels[j] == labels[q] ? d.positives : d.negatives).push_back(static_cast<Index>(j));
  }
  return d;
}

std::vector<QueryDecomposition> decompose_batch(const LabeledBatch& batch) {
  batch.validate();
  std::vector<QueryDecomposition> out;
  for (Index q = 0; q < batch.size(); ++q) {
    auto d = decompose_query(batch.labels, q);
    if (!d.positives.empty()) out.push_back(std::move(d));
  }
  return out;
}

PairwiseRanking ranking_from_similarity(const QueryDecomposition& decomp,
                                        const Eigen::Ref<const Eigen::VectorXd>& sims) {
  PairwiseRanking r{decomp.query_index, decomp.positives, decomp.negatives, {}};
  r.y.resize(static_cast<Index>(decomp.positives.size()),
             static_cast<Index>(decomp.negatives.size()));
  for (Index a = 0; a < r.y.rows(); ++a)
    for (Index b = 0; b < r.y.cols(); ++b)
      r.y(a, b) = sims(r.positives[a]) >= sims(r.negatives[b]) ? 1 : -1;
  return r;
}

double score(const QueryDecomposition& decomp, const PairwiseRanking& ranking,
             const Eigen::Ref<const Eigen::VectorXd>& sims) {
  if (decomp.positives.empty() || decomp.negatives.empty()) throw EmptySide();
  if (ranking.query_index != decomp.query_index || ranking.positives != decomp.positives ||
      ranking.negatives != decomp.negatives)
    throw ContractError("score: ranking does not match the query decomposition");
  if (ranking.y.rows() != static_cast<Index>(decomp.positives.size()) ||
      ranking.y.cols() != static_cast<Index>(decomp.negatives.size()))
    throw ContractError("score: ranking matrix has the wrong shape");
  double sum = 0.0;
  for (Index a = 0; a < ranking.y.rows(); ++a)
    for (Index b = 0; b < ranking.y.cols(); ++b)
      sum += ranking.y(a, b) * (sims(decomp.positives[a]) - sims(decomp.negatives[b]));
  return sum / static_cast<double>(ranking.y.rows() * ranking.y.cols());
}

Eigen::VectorXd score_coefficients(const PairwiseRanking& ranking, Index batch_size) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(batch_size);
  if (ranking.y.size() == 0) throw EmptySide();
  const double norm = 1.0 / static_cast<double>(ranking.y.size());
  const Eigen::VectorXd row_sums = ranking.y.cast<double>().rowwise().sum();
  const Eigen::RowVectorXd col_sums = ranking.y.cast<double>().colwise().sum();
  for (Index a = 0; a < ranking.y.rows(); ++a) c(ranking.positives[a]) += norm * row_sums(a);
  for (Index b = 0; b < ranking.y.cols(); ++b) c(ranking.negatives[b]) -= norm * col_sums(b);
  return c;
}

bool satisfies(const LineWitness& w, const TripleConstraints& c) {
  const double xi = w.coordinate[0], xj = w.coordinate[1], xk = w.coordinate[2];
  const int from_i = std::abs(xk - xi) < std::abs(xj - xi) ? 1 : -1;
  const int from_k = std::abs(xi - xk) < std::abs(xj - xk) ? 1 : -1;
  const bool strict = std::abs(xk - xi) != std::abs(xj - xi) && std::abs(xi - xk) != std::abs(xj - xk);
  return strict && from_i == c.i_view_k_over_j && from_k == c.k_view_i_over_j;
}

LineWitness consistency_check(const TripleConstraints& c) {
  auto valid = [](int v) { return v == 1 || v == -1; };
  if (!valid(c.i_view_k_over_j) || !valid(c.k_view_i_over_j))
    throw ContractError("consistency_check: constraints must be +1 or -1");

  using enum TriplePoint;
  LineWitness w;
  if (c.i_view_k_over_j == 1 && c.k_view_i_over_j == 1) {
    // i and k close together, j far to the right.
    w = {{I, K, J}, {0.0, 3.0, 1.0}};
  } else if (c.i_view_k_over_j == 1) {
    // k sits between i and j, nearer to j.
    w = {{I, K, J}, {0.0, 3.0, 2.0}};
  } else if (c.k_view_i_over_j == 1) {
    w = {{K, I, J}, {2.0, 3.0, 0.0}};
  } else {
    // j between the two positives.
    w = {{I, J, K}, {0.0, 1.0, 3.0}};
  }
  return w;
}

}  // namespace rankopt
