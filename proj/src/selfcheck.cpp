#include "rankopt/selfcheck.hpp"

#include "rankopt/errors.hpp"
#include "rankopt/oracle.hpp"
#include "rankopt/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rankopt {

namespace random_instance {

CanonicalQuery canonical_query(std::mt19937_64& rng, Index positives, Index negatives) {
  const Index n = 1 + positives + negatives;
  std::vector<ClassId> labels(static_cast<std::size_t>(n), 0);
  std::vector<Index> perm(static_cast<std::size_t>(n - 1));
  std::iota(perm.begin(), perm.end(), Index{1});
  std::shuffle(perm.begin(), perm.end(), rng);
  for (Index i = 0; i < negatives; ++i) labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = 1;

  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd sims(n);
  for (Index i = 0; i < n; ++i) sims(i) = uni(rng);
  return canonicalize(decompose_query(labels, 0), sims);
}

LabeledBatch labeled_batch(std::mt19937_64& rng, Index n, Index dim, int max_classes) {
  if (n < 3 || max_classes < 2)
    throw ContractError("labeled_batch: need n >= 3 and at least 2 classes");
  std::uniform_int_distribution<int> cls(0, std::max(1, max_classes - 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledBatch b;
  b.points.resize(dim, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < dim; ++i) b.points(i, j) = normal(rng);
  while (true) {
    b.labels.assign(static_cast<std::size_t>(n), 0);
    for (auto& l : b.labels) l = cls(rng);
    std::vector<int> counts(static_cast<std::size_t>(max_classes), 0);
    for (auto l : b.labels) ++counts[static_cast<std::size_t>(l)];
    const auto present = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; });
    const bool has_pair = std::any_of(counts.begin(), counts.end(), [](int c) { return c >= 2; });
    if (present >= 2 && has_pair) return b;
  }
}

Model model(std::mt19937_64& rng, std::vector<Index> dims) {
  auto m = Model::zeros(std::move(dims));
  std::normal_distribution<double> normal(0.0, 0.5);
  for (Index i = 0; i < m.weights().size(); ++i) m.weights()(i) = normal(rng);
  return m;
}

Interleaving interleaving(std::mt19937_64& rng, const CanonicalQuery& cq) {
  std::vector<Index> slots(static_cast<std::size_t>(cq.num_positives() + cq.num_negatives()));
  std::iota(slots.begin(), slots.end(), Index{0});
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(cq.num_positives()));
  std::sort(slots.begin(), slots.end());
  return {cq.query_index, slots};
}

}  // namespace random_instance

namespace {

void record(CheckResult& r, bool ok, const std::string& what) {
  ++r.total;
  if (ok)
    ++r.passed;
  else if (r.detail.empty())
    r.detail = what;
}

}  // namespace

CheckResult check_ap_oracle(std::mt19937_64& rng, std::size_t n, Index max_batch, double tol) {
  CheckResult r{"ap oracle", 0, 0, {}};
  std::uniform_int_distribution<Index> size(2, max_batch);
  for (std::size_t t = 0; t < n; ++t) {
    const Index b = size(rng);
    std::uniform_int_distribution<int> cls(0, static_cast<int>(std::max<Index>(1, b / 2)));
    std::vector<ClassId> labels(static_cast<std::size_t>(b));
    for (auto& l : labels) l = cls(rng);

    double worst = 0.0;
    for (Index q = 0; q < b; ++q) {
      const auto rel = relevance_mask(labels, q);
      if (rel.count() == 0) continue;
      RankOrder o{q, {}};
      for (Index j = 0; j < b; ++j)
        if (j != q) o.order.push_back(j);
      std::shuffle(o.order.begin(), o.order.end(), rng);
      worst = std::max(worst, std::abs(average_precision(o, rel) -
                                       oracle::average_precision(o.order, labels, q)));
    }
    std::ostringstream msg;
    msg << "instance " << t << ": |AP - oracle| = " << worst;
    record(r, worst <= tol, msg.str());
  }
  return r;
}

CheckResult check_inference_oracle(std::mt19937_64& rng, std::size_t n, InferenceMode mode,
                                   Index max_side, double tol) {
  CheckResult r{std::string("inference oracle (") + to_string(mode) + ")", 0, 0, {}};
  std::uniform_int_distribution<Index> side(1, max_side);
  constexpr std::array<double, 3> kEpsilons{0.1, 1.0, 10.0};
  for (std::size_t t = 0; t < n; ++t) {
    const auto cq = random_instance::canonical_query(rng, side(rng), side(rng));
    const AugmentedObjective obj{mode, kEpsilons[t % kEpsilons.size()]};
    const auto fast = mode == InferenceMode::Standard && t % 2 == 0
                          ? standard_inference(cq)
                          : loss_augmented_inference(cq, obj);
    const auto brute = oracle::brute_force_augmented(cq, obj);
    const double v = augmented_value(cq, fast, obj);
    std::ostringstream msg;
    msg << "instance " << t << ": solver " << v << " vs oracle " << brute.value;
    record(r, std::abs(v - brute.value) <= tol, msg.str());
  }
  return r;
}

CheckResult check_full_permutation(std::mt19937_64& rng, std::size_t n, Index max_total, double tol) {
  CheckResult r{"full-permutation structure", 0, 0, {}};
  constexpr std::array<InferenceMode, 4> kModes{InferenceMode::Standard, InferenceMode::Hinge,
                                                InferenceMode::DirectPositive,
                                                InferenceMode::DirectNegative};
  for (std::size_t t = 0; t < n; ++t) {
    std::uniform_int_distribution<Index> pos(1, max_total - 1);
    const Index p = pos(rng);
    std::uniform_int_distribution<Index> neg(1, max_total - p);
    const auto cq = random_instance::canonical_query(rng, p, neg(rng));
    const AugmentedObjective obj{kModes[t % kModes.size()], 1.0};
    const double interleaved = oracle::brute_force_augmented(cq, obj).value;
    const double full = oracle::best_full_permutation(cq, obj);
    std::ostringstream msg;
    msg << "instance " << t << ": permutation " << full << " vs interleaving " << interleaved;
    record(r, full <= interleaved + tol, msg.str());
  }
  return r;
}

CheckResult check_score_gradient(std::mt19937_64& rng, std::size_t n, double h, double rel_tol,
                                 double floor) {
  CheckResult r{"score gradient finite differences", 0, 0, {}};
  std::uniform_int_distribution<Index> batch_size(4, 8);
  for (std::size_t t = 0; t < n; ++t) {
    const Index dim = 3 + static_cast<Index>(t % 3);
    const auto model = random_instance::model(rng, {dim, 6, 4});
    const auto batch = random_instance::labeled_batch(rng, batch_size(rng), dim, 3);
    const Eigen::MatrixXd emb = model.embed_all(batch.points);
    // Near-zero embeddings put the floored cosine's curvature far below the
    // finite-difference step; redraw those.
    if (emb.colwise().norm().minCoeff() < 1e-3) {
      --t;
      continue;
    }
    const auto queries = decompose_batch(batch);
    const auto& d = queries[std::uniform_int_distribution<std::size_t>(0, queries.size() - 1)(rng)];
    const Eigen::VectorXd sims = query_similarities(emb, d.query_index);
    const auto cq = canonicalize(d, sims);
    const auto ranking = to_pairwise(cq, random_instance::interleaving(rng, cq));

    const Eigen::VectorXd analytic = score_gradient(model, batch, ranking);
    const Eigen::VectorXd numeric = oracle::central_difference(
        [&](const Eigen::VectorXd& w) {
          return score_under(Model(model.layer_dims(), w), batch, ranking);
        },
        model.weights(), h);

    double worst = 0.0;
    for (Index i = 0; i < analytic.size(); ++i) {
      const double scale = std::max(std::abs(analytic(i)), std::abs(numeric(i)));
      if (scale <= floor) continue;
      worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
    }
    std::ostringstream msg;
    msg << "instance " << t << ": max relative error " << worst;
    record(r, worst < rel_tol, msg.str());
  }
  return r;
}

CheckResult check_consistency_table() {
  CheckResult r{"pairwise consistency table", 0, 0, {}};
  for (int a : {1, -1})
    for (int b : {1, -1}) {
      const TripleConstraints c{a, b};
      const auto witness = consistency_check(c);
      const auto brute = oracle::consistency_witnesses(c);
      const bool listed = std::any_of(brute.begin(), brute.end(), [&](const LineWitness& w) {
        return w.order == witness.order;
      });
      std::ostringstream msg;
      msg << "case (" << a << ", " << b << ")";
      record(r, satisfies(witness, c) && !brute.empty() && listed, msg.str());
    }
  return r;
}

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<CheckResult> out;
  out.push_back(check_ap_oracle(rng, options.ap_instances, 12, 1e-12));
  for (auto mode : {InferenceMode::Standard, InferenceMode::Hinge, InferenceMode::DirectPositive,
                    InferenceMode::DirectNegative})
    out.push_back(check_inference_oracle(rng, options.inference_instances, mode, 5, 1e-9));
  out.push_back(check_full_permutation(rng, options.permutation_instances, 7, 1e-9));
  out.push_back(check_score_gradient(rng, options.gradient_instances, 1e-5, 1e-4, 1e-8));
  out.push_back(check_consistency_table());
  return out;
}

}  // namespace rankopt
