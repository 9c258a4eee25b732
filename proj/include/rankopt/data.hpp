#pragma once

#include "rankopt/metrics.hpp"
#include "rankopt/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace rankopt {

struct Dataset {
  Index dim = 0;
  std::map<ClassId, Eigen::MatrixXd> classes;  // columns are points

  Index num_points() const;
  std::vector<ClassId> class_ids() const;
  // Throws DataError on an empty class or a dimension mismatch.
  void validate() const;
};

struct SyntheticSpec {
  Index n_classes = 8;
  Index per_class = 60;
  Index dim = 16;
  double spread = 1.0;
  double separation = 6.0;
  std::uint64_t seed = 0;
  // When nonzero, class means vary only in the first `informative_dims`
  // coordinates; the rest are zero-mean noise with std `nuisance_spread`.
  Index informative_dims = 0;
  double nuisance_spread = 0.0;
};

// Gaussian clusters with pairwise mean distance >= separation and per-class
// standard deviation `spread` (in the informative coordinates). Throws
// PlacementFailed if the means cannot be placed within the retry budget.
Dataset generate_synthetic(const SyntheticSpec& spec);

// CSV: one point per row, class id followed by the feature values.
Dataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

// Disjoint class-level split by sorted class id. The test split takes the
// remainder after train and validation.
struct ClassSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};
ClassSplit split_classes(const Dataset& ds, double train_fraction, double validation_fraction);

// Uniform without-replacement sampling of classes, then of points per class.
// Points are grouped by class in the returned batch.
LabeledBatch sample_batch(const Dataset& ds, Index classes_per_batch, Index points_per_class,
                          std::uint64_t seed);

struct EpisodeSpec {
  Index n_way = 5;
  Index k_shot = 1;
  Index n_query = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Support points first (k_shot per class, classes in sampled order), then
// query points (n_query per class).
struct Episode {
  LabeledBatch points;
  Index n_support = 0;
};

Episode sample_episode(const Dataset& ds, const EpisodeSpec& spec);

struct EpisodeResult {
  double accuracy = 0.0;
  double retrieval_map = 0.0;
};

// Classification: 1-nearest support point by learned similarity.
// Retrieval: each query ranks every other episode point.
EpisodeResult score_episode(const Model& model, const Episode& episode);
EpisodeResult run_episode(const Model& model, const Dataset& ds, const EpisodeSpec& spec);

struct MetricSummary {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample std / sqrt(n)
};

MetricSummary summarize(std::span<const double> values);

struct EvaluationSummary {
  MetricSummary accuracy;
  MetricSummary retrieval_map;
  std::size_t episodes = 0;
};

// Episode i uses seed derive_seed(spec.seed, i). Results are reduced in
// episode order regardless of thread count.
EvaluationSummary evaluate(const Model& model, const Dataset& ds, const EpisodeSpec& spec,
                           std::size_t n_episodes, unsigned threads = 1);

}  // namespace rankopt
