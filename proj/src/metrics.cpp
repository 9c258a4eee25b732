#include "rankopt/metrics.hpp"

#include "rankopt/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace rankopt {

void LabeledBatch::validate() const {
  if (static_cast<std::size_t>(points.cols()) != labels.size())
    throw ContractError("batch: " + std::to_string(points.cols()) + " points but " +
                        std::to_string(labels.size()) + " labels");
  if (points.cols() < 2) throw ContractError("batch: need at least 2 points");
  if (points.rows() < 1) throw ContractError("batch: feature dimension must be >= 1");
  std::set<ClassId> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ContractError("batch: need at least 2 distinct labels");
}

Index RelevanceMask::count() const {
  return static_cast<Index>(std::count(relevant.begin(), relevant.end(), true));
}

RelevanceMask relevance_mask(std::span<const ClassId> labels, Index query) {
  if (query < 0 || static_cast<std::size_t>(query) >= labels.size())
    throw RangeError("relevance_mask: query index out of range");
  RelevanceMask rel{query, std::vector<bool>(labels.size(), false)};
  const auto q = static_cast<std::size_t>(query);
  for (std::size_t j = 0; j < labels.size(); ++j)
    rel.relevant[j] = (j != q && labels[j] == labels[q]);
  return rel;
}

RankOrder rank_by_similarity(Index query, const Eigen::Ref<const Eigen::VectorXd>& sims) {
  RankOrder out{query, {}};
  out.order.reserve(static_cast<std::size_t>(sims.size()));
  for (Index j = 0; j < sims.size(); ++j)
    if (j != query) out.order.push_back(j);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](Index a, Index b) { return sims(a) > sims(b); });
  return out;
}

double precision_at(const RankOrder& order, const RelevanceMask& rel, Index j) {
  if (order.query_index != rel.query_index)
    throw ContractError("precision_at: order and relevance mask refer to different queries");
  if (j < 1 || j > static_cast<Index>(order.order.size()))
    throw RangeError("precision_at: j=" + std::to_string(j) + " outside [1, " +
                     std::to_string(order.order.size()) + "]");
  Index hits = 0;
  for (Index k = 0; k < j; ++k) hits += rel.contains(order.order[static_cast<std::size_t>(k)]);
  return static_cast<double>(hits) / static_cast<double>(j);
}

double average_precision(const RankOrder& order, const RelevanceMask& rel) {
  if (order.query_index != rel.query_index)
    throw ContractError("average_precision: order and relevance mask refer to different queries");
  const Index n_rel = rel.count();
  if (n_rel == 0) throw NoRelevantPoints();
  // Running hit count gives Prec@j in O(1) per position.
  double sum = 0.0;
  Index hits = 0;
  for (std::size_t pos = 0; pos < order.order.size(); ++pos) {
    if (!rel.contains(order.order[pos])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
  }
  return sum / static_cast<double>(n_rel);
}

double ap_task_loss(const RankOrder& order, const RelevanceMask& rel) {
  return 1.0 - average_precision(order, rel);
}

double mean_average_precision(const LabeledBatch& batch, std::span<const RankOrder> orders) {
  if (orders.empty()) throw ContractError("mean_average_precision: no rankings given");
  double sum = 0.0;
  for (const auto& o : orders) {
    if (static_cast<std::size_t>(o.order.size()) + 1 != batch.labels.size())
      throw ContractError("mean_average_precision: ranking does not cover the batch");
    sum += average_precision(o, relevance_mask(batch.labels, o.query_index));
  }
  return sum / static_cast<double>(orders.size());
}

}  // namespace rankopt
