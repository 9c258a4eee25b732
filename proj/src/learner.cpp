#include "rankopt/learner.hpp"

#include "rankopt/errors.hpp"
#include "rankopt/parallel.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace rankopt {

void GradientRule::validate() const {
  if (!(epsilon > 0.0)) throw ContractError("gradient rule: epsilon must be positive");
  if (!(alpha > 0.0)) throw ContractError("gradient rule: alpha must be positive");
}

AugmentedObjective GradientRule::augmented_objective() const {
  if (method == Method::SSVM) return {InferenceMode::Hinge, 1.0};
  return {direction == Direction::Positive ? InferenceMode::DirectPositive
                                           : InferenceMode::DirectNegative,
          epsilon};
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ContractError("train: learning rate must be finite and >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0))
    throw ContractError("train: decay factor must be in (0, 1]");
  if (max_steps < 1) throw ContractError("train: max_steps must be >= 1");
  if (batch.classes_per_batch < 2) throw ContractError("train: need at least 2 classes per batch");
  if (batch.points_per_class < 2) throw ContractError("train: need at least 2 points per class");
}

double TrainConfig::learning_rate_at(std::size_t step) const {
  if (decay_every == 0) return learning_rate;
  return learning_rate * std::pow(decay_factor, static_cast<double>(step / decay_every));
}

namespace {

// Upstream gradient on the embeddings for sum_c coef[c] * cos(e_q, e_c).
void accumulate_similarity_grad(const Eigen::MatrixXd& emb, Index query,
                                const Eigen::VectorXd& coef, Eigen::MatrixXd& upstream) {
  const auto eq = emb.col(query);
  for (Index c = 0; c < coef.size(); ++c) {
    if (c == query || coef(c) == 0.0) continue;
    const auto ec = emb.col(c);
    upstream.col(query) += coef(c) * cosine_gradient(eq, ec);
    upstream.col(c) += coef(c) * cosine_gradient(ec, eq);
  }
}

Eigen::VectorXd interleaving_coefficients(const CanonicalQuery& cq, const Interleaving& il,
                                          Index batch_size) {
  return score_coefficients(to_pairwise(cq, il), batch_size);
}

struct QueryUpdate {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  double ap = 0.0;
};

QueryUpdate query_update(const CanonicalQuery& cq, Index batch_size, const GradientRule& rule) {
  QueryUpdate u;
  const auto y_w = standard_inference(cq);
  u.ap = interleaving_ap(cq, y_w);
  const auto objective = rule.augmented_objective();
  const auto y_aug = loss_augmented_inference(cq, objective);
  const Eigen::VectorXd c_aug = interleaving_coefficients(cq, y_aug, batch_size);

  if (rule.method == Method::SSVM) {
    const auto y_gt = ground_truth(cq);
    u.coefficients = rule.alpha * c_aug - interleaving_coefficients(cq, y_gt, batch_size);
    u.objective = augmented_value(cq, y_aug, objective) - interleaving_score(cq, y_gt);
  } else {
    const double sign = rule.direction == Direction::Positive ? 1.0 : -1.0;
    u.coefficients = (sign / rule.epsilon) *
                     (rule.alpha * c_aug - interleaving_coefficients(cq, y_w, batch_size));
    u.objective = augmented_value(cq, y_aug, objective);
  }
  return u;
}

}  // namespace

Eigen::VectorXd score_gradient(const Model& model, const LabeledBatch& batch,
                               const PairwiseRanking& ranking) {
  const auto fwd = model.forward(batch.points);
  const Eigen::MatrixXd& emb = fwd.output();
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(emb.rows(), emb.cols());
  accumulate_similarity_grad(emb, ranking.query_index, score_coefficients(ranking, batch.size()),
                             upstream);
  return model.backward(fwd, upstream);
}

Eigen::VectorXd score_gradient(const Model& model, const LabeledBatch& batch,
                               const CanonicalQuery& cq, const Interleaving& il) {
  return score_gradient(model, batch, to_pairwise(cq, il));
}

double score_under(const Model& model, const LabeledBatch& batch, const PairwiseRanking& ranking) {
  const Eigen::MatrixXd emb = model.embed_all(batch.points);
  const Eigen::VectorXd sims = query_similarities(emb, ranking.query_index);
  return score(QueryDecomposition{ranking.query_index, ranking.positives, ranking.negatives},
               ranking, sims);
}

BatchGradient batch_gradient(const Model& model, const LabeledBatch& batch,
                             const GradientRule& rule, unsigned threads) {
  std::vector<Index> all(static_cast<std::size_t>(batch.size()));
  std::iota(all.begin(), all.end(), Index{0});
  return batch_gradient(model, batch, rule, all, threads);
}

BatchGradient batch_gradient(const Model& model, const LabeledBatch& batch,
                             const GradientRule& rule, std::span<const Index> queries,
                             unsigned threads) {
  batch.validate();
  rule.validate();
  const auto fwd = model.forward(batch.points);
  const Eigen::MatrixXd& emb = fwd.output();

  std::vector<QueryDecomposition> usable;
  for (Index q : queries) {
    auto d = decompose_query(batch.labels, q);
    if (!d.positives.empty()) usable.push_back(std::move(d));
  }
  if (usable.empty()) throw EmptyGradient();

  std::vector<QueryUpdate> updates(usable.size());
  parallel_for(usable.size(), threads, [&](std::size_t i) {
    const Eigen::VectorXd sims = query_similarities(emb, usable[i].query_index);
    updates[i] = query_update(canonicalize(usable[i], sims), batch.size(), rule);
  });

  BatchGradient out;
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(emb.rows(), emb.cols());
  for (std::size_t i = 0; i < usable.size(); ++i) {
    accumulate_similarity_grad(emb, usable[i].query_index, updates[i].coefficients, upstream);
    out.objective += updates[i].objective;
    out.batch_map += updates[i].ap;
  }
  out.usable_queries = static_cast<Index>(usable.size());
  out.objective /= static_cast<double>(usable.size());
  out.batch_map /= static_cast<double>(usable.size());
  out.gradient = model.backward(fwd, upstream);
  return out;
}

TrainResult train(Model model, const Dataset& data, const GradientRule& rule,
                  const TrainConfig& config, const std::function<void(const MetricsRow&)>& on_step) {
  config.validate();
  rule.validate();
  data.validate();
  if (data.dim != model.input_dim())
    throw ContractError("train: dataset dimension " + std::to_string(data.dim) +
                        " does not match model input " + std::to_string(model.input_dim()));

  std::vector<MetricsRow> log;
  log.reserve(config.max_steps);
  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const auto batch = sample_batch(data, config.batch.classes_per_batch,
                                    config.batch.points_per_class, derive_seed(config.seed, step));
    const auto g = batch_gradient(model, batch, rule, config.threads);
    const double lr = config.learning_rate_at(step);
    model.weights() -= lr * g.gradient;
    if (!model.weights().allFinite()) throw Diverged(step);
    log.push_back({step, lr, g.objective, g.batch_map});
    if (on_step) on_step(log.back());
  }
  return {std::move(model), std::move(log)};
}

void write_metrics_header(std::ostream& out) { out << "step,lr,objective,batch_map\n"; }

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  char buf[64];
  auto put = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
  };
  out << row.step;
  put(row.lr);
  put(row.objective);
  put(row.batch_map);
  out << '\n';
}

}  // namespace rankopt
