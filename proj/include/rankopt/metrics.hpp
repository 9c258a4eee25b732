#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rankopt {

using ClassId = int;
using Index = Eigen::Index;

// Points are stored column-wise: points.col(j) is the feature vector of point j.
struct LabeledBatch {
  Eigen::MatrixXd points;
  std::vector<ClassId> labels;

  Index size() const { return points.cols(); }
  Index dim() const { return points.rows(); }

  // Throws ContractError unless |B| >= 2, d >= 1, sizes agree and at least
  // two distinct labels are present.
  void validate() const;
};

// order[j] holds the index of the (j+1)-th most similar point to the query.
struct RankOrder {
  Index query_index = 0;
  std::vector<Index> order;
};

struct RelevanceMask {
  Index query_index = 0;
  std::vector<bool> relevant;  // indexed by batch position; relevant[query] is false

  bool contains(Index i) const { return relevant[static_cast<std::size_t>(i)]; }
  Index count() const;
};

RelevanceMask relevance_mask(std::span<const ClassId> labels, Index query);

// Sorts every non-query index by descending similarity, ties by ascending index.
RankOrder rank_by_similarity(Index query, const Eigen::Ref<const Eigen::VectorXd>& sims);

// Throws RangeError for j outside [1, |order|] and ContractError if the query
// indices disagree.
double precision_at(const RankOrder& order, const RelevanceMask& rel, Index j);

// Throws NoRelevantPoints when the relevant set is empty.
double average_precision(const RankOrder& order, const RelevanceMask& rel);

double ap_task_loss(const RankOrder& order, const RelevanceMask& rel);

// Mean of per-query AP over `orders`. Queries with an empty relevant set are
// a contract violation here; callers drop them beforehand.
double mean_average_precision(const LabeledBatch& batch, std::span<const RankOrder> orders);

}  // namespace rankopt
