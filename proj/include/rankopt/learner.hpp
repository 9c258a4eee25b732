#pragma once

#include "rankopt/data.hpp"
#include "rankopt/inference.hpp"
#include "rankopt/metrics.hpp"
#include "rankopt/model.hpp"
#include "rankopt/scoring.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace rankopt {

enum class Method { SSVM, DLM };
enum class Direction { Positive, Negative };

// Per-query update vectors (w <- w - lr * g):
//   SSVM:  alpha * grad F(y_hinge) - grad F(y_gt)
//   DLM:   +/- (1/epsilon) * (alpha * grad F(y_direct) - grad F(y_w))
// `direction` and `epsilon` only apply to DLM.
struct GradientRule {
  Method method = Method::DLM;
  Direction direction = Direction::Positive;
  double epsilon = 1.0;
  double alpha = 10.0;

  static GradientRule ssvm(double alpha = 10.0) { return {Method::SSVM, Direction::Positive, 1.0, alpha}; }
  static GradientRule dlm(Direction d, double epsilon = 1.0, double alpha = 10.0) {
    return {Method::DLM, d, epsilon, alpha};
  }

  void validate() const;
  // The loss-augmented inference this rule needs.
  AugmentedObjective augmented_objective() const;
};

struct BatchShape {
  Index classes_per_batch = 4;
  Index points_per_class = 5;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t decay_every = 2000;  // 0 disables decay
  double decay_factor = 0.75;
  std::size_t max_steps = 2000;
  BatchShape batch;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  // lr * decay_factor^floor(step / decay_every), steps counted from 0.
  double learning_rate_at(std::size_t step) const;
};

// grad_w F(x, y, w) for a fixed pairwise ranking of one query.
Eigen::VectorXd score_gradient(const Model& model, const LabeledBatch& batch,
                               const PairwiseRanking& ranking);
Eigen::VectorXd score_gradient(const Model& model, const LabeledBatch& batch,
                               const CanonicalQuery& cq, const Interleaving& il);

// F under `model` for a fixed pairwise ranking (similarities recomputed).
double score_under(const Model& model, const LabeledBatch& batch, const PairwiseRanking& ranking);

struct BatchGradient {
  Eigen::VectorXd gradient;
  double objective = 0.0;  // mean loss-augmented objective over usable queries
  double batch_map = 0.0;  // mAP of the current rankings y_w
  Index usable_queries = 0;
};

// Sum of per-query updates over queries with at least one positive.
// Throws EmptyGradient when no query is usable.
BatchGradient batch_gradient(const Model& model, const LabeledBatch& batch,
                             const GradientRule& rule, unsigned threads = 1);

// Same update restricted to a subset of queries.
BatchGradient batch_gradient(const Model& model, const LabeledBatch& batch,
                             const GradientRule& rule, std::span<const Index> queries,
                             unsigned threads = 1);

struct MetricsRow {
  std::size_t step = 0;
  double lr = 0.0;
  double objective = 0.0;
  double batch_map = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<MetricsRow> log;
};

// Plain SGD over batches drawn from `data` with seeds derive_seed(seed, step).
// Throws Diverged if the weights become non-finite.
TrainResult train(Model model, const Dataset& data, const GradientRule& rule,
                  const TrainConfig& config,
                  const std::function<void(const MetricsRow&)>& on_step = {});

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

}  // namespace rankopt
