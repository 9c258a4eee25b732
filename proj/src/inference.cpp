#include "rankopt/inference.hpp"

#include "rankopt/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace rankopt {

namespace {

std::vector<Index> sorted_block(const std::vector<Index>& block,
                                const Eigen::Ref<const Eigen::VectorXd>& sims) {
  std::vector<Index> out = block;
  std::sort(out.begin(), out.end(), [&](Index a, Index b) {
    return sims(a) > sims(b) || (sims(a) == sims(b) && a < b);
  });
  return out;
}

Eigen::VectorXd gather(const std::vector<Index>& idx, const Eigen::Ref<const Eigen::VectorXd>& sims) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = sims(idx[i]);
  return out;
}

}  // namespace

CanonicalQuery canonicalize(const QueryDecomposition& decomp,
                            const Eigen::Ref<const Eigen::VectorXd>& sims) {
  if (decomp.positives.empty() || decomp.negatives.empty()) throw EmptySide();
  CanonicalQuery cq;
  cq.query_index = decomp.query_index;
  cq.positives = sorted_block(decomp.positives, sims);
  cq.negatives = sorted_block(decomp.negatives, sims);
  cq.positive_sims = gather(cq.positives, sims);
  cq.negative_sims = gather(cq.negatives, sims);
  return cq;
}

const char* to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::Standard: return "standard";
    case InferenceMode::Hinge: return "hinge";
    case InferenceMode::DirectPositive: return "direct+";
    case InferenceMode::DirectNegative: return "direct-";
  }
  return "?";
}

double AugmentedObjective::loss_weight() const {
  switch (mode) {
    case InferenceMode::Standard: return 0.0;
    case InferenceMode::Hinge: return 1.0;
    case InferenceMode::DirectPositive: return epsilon;
    case InferenceMode::DirectNegative: return -epsilon;
  }
  return 0.0;
}

void AugmentedObjective::validate() const {
  const bool direct = mode == InferenceMode::DirectPositive || mode == InferenceMode::DirectNegative;
  if (direct && !(epsilon > 0.0))
    throw ContractError("epsilon must be positive for direct loss inference");
}

void validate(const CanonicalQuery& cq, const Interleaving& il) {
  if (il.query_index != cq.query_index)
    throw ContractError("interleaving belongs to a different query");
  if (static_cast<Index>(il.positions.size()) != cq.num_positives())
    throw ContractError("interleaving has the wrong number of positives");
  const Index total = cq.num_positives() + cq.num_negatives();
  for (std::size_t i = 0; i < il.positions.size(); ++i) {
    if (il.positions[i] < 0 || il.positions[i] >= total)
      throw ContractError("interleaving position out of range");
    if (i > 0 && il.positions[i] <= il.positions[i - 1])
      throw ContractError("interleaving positions must be strictly increasing");
  }
}

Interleaving ground_truth(const CanonicalQuery& cq) {
  Interleaving il{cq.query_index, std::vector<Index>(static_cast<std::size_t>(cq.num_positives()))};
  std::iota(il.positions.begin(), il.positions.end(), Index{0});
  return il;
}

PairwiseRanking to_pairwise(const CanonicalQuery& cq, const Interleaving& il) {
  validate(cq, il);
  PairwiseRanking r{cq.query_index, cq.positives, cq.negatives, {}};
  r.y.resize(cq.num_positives(), cq.num_negatives());
  for (Index a = 0; a < r.y.rows(); ++a) {
    const Index above = il.positions[static_cast<std::size_t>(a)] - a;  // negatives ranked above
    for (Index b = 0; b < r.y.cols(); ++b) r.y(a, b) = b < above ? -1 : 1;
  }
  return r;
}

RankOrder to_rank_order(const CanonicalQuery& cq, const Interleaving& il) {
  validate(cq, il);
  RankOrder o{cq.query_index, {}};
  const Index total = cq.num_positives() + cq.num_negatives();
  o.order.reserve(static_cast<std::size_t>(total));
  std::size_t p = 0, n = 0;
  for (Index r = 0; r < total; ++r) {
    if (p < il.positions.size() && il.positions[p] == r)
      o.order.push_back(cq.positives[p++]);
    else
      o.order.push_back(cq.negatives[n++]);
  }
  return o;
}

double interleaving_score(const CanonicalQuery& cq, const Interleaving& il) {
  validate(cq, il);
  const Index P = cq.num_positives(), N = cq.num_negatives();
  double sum = 0.0;
  for (Index a = 0; a < P; ++a) {
    const Index above = il.positions[static_cast<std::size_t>(a)] - a;
    for (Index b = 0; b < N; ++b)
      sum += (b < above ? -1.0 : 1.0) * (cq.positive_sims(a) - cq.negative_sims(b));
  }
  return sum / static_cast<double>(P * N);
}

double interleaving_ap(const CanonicalQuery& cq, const Interleaving& il) {
  validate(cq, il);
  double sum = 0.0;
  for (std::size_t i = 0; i < il.positions.size(); ++i)
    sum += static_cast<double>(i + 1) / static_cast<double>(il.positions[i] + 1);
  return sum / static_cast<double>(il.positions.size());
}

double augmented_value(const CanonicalQuery& cq, const Interleaving& il,
                       const AugmentedObjective& objective) {
  return interleaving_score(cq, il) + objective.loss_weight() * (1.0 - interleaving_ap(cq, il));
}

Interleaving standard_inference(const CanonicalQuery& cq) {
  if (cq.positives.empty() || cq.negatives.empty()) throw EmptySide();
  Interleaving il{cq.query_index, {}};
  il.positions.reserve(cq.positives.size());
  // Merge the two sorted blocks under the same (similarity desc, index asc) order.
  Index n = 0;
  for (Index p = 0; p < cq.num_positives(); ++p) {
    const double s = cq.positive_sims(p);
    const Index idx = cq.positives[static_cast<std::size_t>(p)];
    while (n < cq.num_negatives() &&
           (cq.negative_sims(n) > s ||
            (cq.negative_sims(n) == s && cq.negatives[static_cast<std::size_t>(n)] < idx)))
      ++n;
    il.positions.push_back(p + n);
  }
  return il;
}

Interleaving loss_augmented_inference(const CanonicalQuery& cq,
                                      const AugmentedObjective& objective) {
  if (cq.positives.empty() || cq.negatives.empty()) throw EmptySide();
  objective.validate();

  const Index P = cq.num_positives(), N = cq.num_negatives();
  const double inv_pn = 1.0 / static_cast<double>(P * N);
  const double loss_per_positive = objective.loss_weight() / static_cast<double>(P);

  // prefix(k) = sum of the k most similar negatives.
  Eigen::VectorXd prefix(N + 1);
  prefix(0) = 0.0;
  for (Index k = 0; k < N; ++k) prefix(k + 1) = prefix(k) + cq.negative_sims(k);
  const double total = prefix(N);

  // Contribution of canonical positive i with k negatives ranked above it:
  // its F terms plus its share of -weight * AP. The constant +weight is dropped.
  auto value = [&](Index i, Index k) {
    const double f = (static_cast<double>(N - 2 * k) * cq.positive_sims(i) - total + 2.0 * prefix(k)) * inv_pn;
    const double ap = static_cast<double>(i + 1) / static_cast<double>(i + 1 + k);
    return f - loss_per_positive * ap;
  };

  // best(i, k): max total contribution of positives i..P-1 with each placed
  // below at least k negatives, respecting non-decreasing k.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(P + 1, N + 2, kNegInf);
  best.row(P).setZero();
  for (Index i = P - 1; i >= 0; --i)
    for (Index k = N; k >= 0; --k)
      best(i, k) = std::max(value(i, k) + best(i + 1, k), best(i, k + 1));

  Interleaving il{cq.query_index, {}};
  il.positions.reserve(static_cast<std::size_t>(P));
  Index k = 0;
  for (Index i = 0; i < P; ++i) {
    const double target = best(i, k);
    while (value(i, k) + best(i + 1, k) != target) ++k;
    il.positions.push_back(i + k);
  }
  return il;
}

}  // namespace rankopt
