#include "rankopt/oracle.hpp"

#include "rankopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankopt::oracle {

double average_precision(std::span<const Index> order, std::span<const ClassId> labels,
                         Index query) {
  const ClassId cls = labels[static_cast<std::size_t>(query)];
  auto relevant = [&](Index i) { return i != query && labels[static_cast<std::size_t>(i)] == cls; };
  long n_rel = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) n_rel += relevant(static_cast<Index>(i));
  if (n_rel == 0) return std::numeric_limits<double>::quiet_NaN();

  double ap = 0.0;
  for (std::size_t j = 1; j <= order.size(); ++j) {
    if (!relevant(order[j - 1])) continue;
    long hits = 0;
    for (std::size_t k = 1; k <= j; ++k) hits += relevant(order[k - 1]);
    ap += (static_cast<double>(hits) / static_cast<double>(j)) / static_cast<double>(n_rel);
  }
  return ap;
}

double full_order_value(const CanonicalQuery& cq, std::span<const Index> order,
                        const AugmentedObjective& objective) {
  auto rank_of = [&](Index idx) {
    return std::find(order.begin(), order.end(), idx) - order.begin();
  };
  const auto P = cq.positives.size(), N = cq.negatives.size();
  double f = 0.0;
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t b = 0; b < N; ++b) {
      const int y = rank_of(cq.positives[a]) < rank_of(cq.negatives[b]) ? 1 : -1;
      f += y * (cq.positive_sims(static_cast<Index>(a)) - cq.negative_sims(static_cast<Index>(b)));
    }
  f /= static_cast<double>(P * N);

  // Labels: 1 for positives, 0 for negatives, query carries label 1 at a
  // sentinel index past the candidates.
  const Index max_idx = std::max(*std::max_element(cq.positives.begin(), cq.positives.end()),
                                 *std::max_element(cq.negatives.begin(), cq.negatives.end()));
  std::vector<ClassId> labels(static_cast<std::size_t>(max_idx + 2), -1);
  for (Index p : cq.positives) labels[static_cast<std::size_t>(p)] = 1;
  for (Index n : cq.negatives) labels[static_cast<std::size_t>(n)] = 0;
  const Index query = max_idx + 1;
  labels[static_cast<std::size_t>(query)] = 1;

  const double ap = average_precision(order, labels, query);
  double weight = 0.0;
  switch (objective.mode) {
    case InferenceMode::Standard: weight = 0.0; break;
    case InferenceMode::Hinge: weight = 1.0; break;
    case InferenceMode::DirectPositive: weight = objective.epsilon; break;
    case InferenceMode::DirectNegative: weight = -objective.epsilon; break;
  }
  return f + weight * (1.0 - ap);
}

namespace {

std::vector<Index> merged_order(const CanonicalQuery& cq, const std::vector<bool>& is_positive) {
  std::vector<Index> order;
  std::size_t p = 0, n = 0;
  for (bool pos : is_positive) order.push_back(pos ? cq.positives[p++] : cq.negatives[n++]);
  return order;
}

}  // namespace

BruteForceResult brute_force_augmented(const CanonicalQuery& cq, const AugmentedObjective& objective) {
  const auto P = cq.positives.size(), N = cq.negatives.size();
  if (P == 0 || N == 0) throw EmptySide();
  if (static_cast<Index>(P + N) > kMaxBruteForceCandidates)
    throw ContractError("brute_force_augmented: more than 16 candidates");

  // prev_permutation from (1..1,0..0) walks subsets with positives placed
  // earliest first, i.e. lexicographic order of the positions vector.
  std::vector<bool> is_positive(P + N, false);
  std::fill(is_positive.begin(), is_positive.begin() + static_cast<long>(P), true);

  BruteForceResult r;
  r.value = -std::numeric_limits<double>::infinity();
  do {
    const auto order = merged_order(cq, is_positive);
    const double v = full_order_value(cq, order, objective);
    ++r.enumerated;
    if (v > r.value) {
      r.value = v;
      r.best = Interleaving{cq.query_index, {}};
      for (std::size_t i = 0; i < is_positive.size(); ++i)
        if (is_positive[i]) r.best.positions.push_back(static_cast<Index>(i));
    }
  } while (std::prev_permutation(is_positive.begin(), is_positive.end()));
  return r;
}

double best_full_permutation(const CanonicalQuery& cq, const AugmentedObjective& objective) {
  std::vector<Index> order(cq.positives);
  order.insert(order.end(), cq.negatives.begin(), cq.negatives.end());
  if (cq.positives.empty() || cq.negatives.empty()) throw EmptySide();
  if (static_cast<Index>(order.size()) > kMaxFullPermutationCandidates)
    throw ContractError("best_full_permutation: more than 7 candidates");
  std::sort(order.begin(), order.end());
  double best = -std::numeric_limits<double>::infinity();
  do {
    best = std::max(best, full_order_value(cq, order, objective));
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

double min_score_gap(const CanonicalQuery& cq) {
  const auto P = cq.positives.size(), N = cq.negatives.size();
  std::vector<bool> is_positive(P + N, false);
  std::fill(is_positive.begin(), is_positive.begin() + static_cast<long>(P), true);
  const AugmentedObjective standard{InferenceMode::Standard, 1.0};
  std::vector<double> values;
  do {
    values.push_back(full_order_value(cq, merged_order(cq, is_positive), standard));
  } while (std::prev_permutation(is_positive.begin(), is_positive.end()));
  std::sort(values.begin(), values.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[i - 1]) gap = std::min(gap, values[i] - values[i - 1]);
  return gap;
}

std::vector<LineWitness> consistency_witnesses(const TripleConstraints& c) {
  std::array<TriplePoint, 3> perm{TriplePoint::I, TriplePoint::J, TriplePoint::K};
  const std::array<std::array<double, 2>, 2> gaps{{{1.0, 2.0}, {2.0, 1.0}}};
  std::vector<LineWitness> out;
  do {
    for (const auto& g : gaps) {
      LineWitness w;
      w.order = perm;
      const std::array<double, 3> x{0.0, g[0], g[0] + g[1]};
      for (std::size_t slot = 0; slot < 3; ++slot)
        w.coordinate[static_cast<std::size_t>(perm[slot])] = x[slot];
      // Strict closeness from each constrained viewpoint.
      const double xi = w.coordinate[0], xj = w.coordinate[1], xk = w.coordinate[2];
      const double di_k = std::fabs(xk - xi), di_j = std::fabs(xj - xi), dk_j = std::fabs(xj - xk);
      if (di_k == di_j || di_k == dk_j) continue;
      const int from_i = di_k < di_j ? 1 : -1;
      const int from_k = di_k < dk_j ? 1 : -1;
      if (from_i == c.i_view_k_over_j && from_k == c.k_view_i_over_j) out.push_back(w);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& w, double h) {
  Eigen::VectorXd grad(w.size());
  Eigen::VectorXd probe = w;
  for (Index i = 0; i < w.size(); ++i) {
    probe(i) = w(i) + h;
    const double up = f(probe);
    probe(i) = w(i) - h;
    const double down = f(probe);
    probe(i) = w(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

Eigen::VectorXd embed(const std::vector<Index>& dims, const Eigen::VectorXd& weights,
                      const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<std::size_t>(dims[l]), out = static_cast<std::size_t>(dims[l + 1]);
    std::vector<double> z(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = weights(static_cast<Index>(off + in * out + r));
      for (std::size_t c = 0; c < in; ++c) acc += weights(static_cast<Index>(off + c * out + r)) * a[c];
      z[r] = (l + 2 < dims.size()) ? std::max(acc, 0.0) : acc;
    }
    off += (in + 1) * out;
    a = std::move(z);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Index>(a.size()));
}

}  // namespace rankopt::oracle
