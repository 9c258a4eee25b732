#include "rankopt/data.hpp"

#include "rankopt/errors.hpp"
#include "rankopt/inference.hpp"
#include "rankopt/parallel.hpp"
#include "rankopt/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace rankopt {

Index Dataset::num_points() const {
  Index n = 0;
  for (const auto& [id, pts] : classes) n += pts.cols();
  return n;
}

std::vector<ClassId> Dataset::class_ids() const {
  std::vector<ClassId> ids;
  ids.reserve(classes.size());
  for (const auto& [id, pts] : classes) ids.push_back(id);
  return ids;
}

void Dataset::validate() const {
  if (dim < 1) throw DataError("dataset: dimension must be >= 1");
  for (const auto& [id, pts] : classes) {
    if (pts.cols() == 0) throw DataError("dataset: class " + std::to_string(id) + " is empty");
    if (pts.rows() != dim)
      throw DataError("dataset: class " + std::to_string(id) + " has dimension " +
                      std::to_string(pts.rows()) + ", expected " + std::to_string(dim));
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 1 || spec.per_class < 1 || spec.dim < 1)
    throw ContractError("generate_synthetic: counts must be >= 1");
  if (!(spec.spread > 0.0)) throw ContractError("generate_synthetic: spread must be positive");
  if (spec.informative_dims < 0 || spec.informative_dims > spec.dim)
    throw ContractError("generate_synthetic: informative_dims must be in [0, dim]");
  if (spec.nuisance_spread < 0.0)
    throw ContractError("generate_synthetic: nuisance_spread must be >= 0");
  const Index informative = spec.informative_dims == 0 ? spec.dim : spec.informative_dims;

  constexpr int kMaxRetries = 1000;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Index n) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };

  // Means are drawn with scale `separation` and rejected if too close to an
  // already placed mean.
  std::vector<Eigen::VectorXd> means;
  for (Index c = 0; c < spec.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
      Eigen::VectorXd m = Eigen::VectorXd::Zero(spec.dim);
      m.head(informative) = spec.separation * gaussian(informative);
      placed = std::all_of(means.begin(), means.end(), [&](const Eigen::VectorXd& other) {
        return (m - other).norm() >= spec.separation;
      });
      if (placed) means.push_back(std::move(m));
    }
    if (!placed)
      throw PlacementFailed("generate_synthetic: could not place class " + std::to_string(c) +
                            " at separation " + std::to_string(spec.separation));
  }

  Dataset ds;
  ds.dim = spec.dim;
  for (Index c = 0; c < spec.n_classes; ++c) {
    Eigen::MatrixXd pts(spec.dim, spec.per_class);
    Eigen::VectorXd scale = Eigen::VectorXd::Constant(spec.dim, spec.spread);
    scale.tail(spec.dim - informative).setConstant(spec.nuisance_spread);
    for (Index j = 0; j < spec.per_class; ++j)
      pts.col(j) = means[static_cast<std::size_t>(c)] + scale.cwiseProduct(gaussian(spec.dim));
    ds.classes.emplace(static_cast<ClassId>(c), std::move(pts));
  }
  return ds;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  field = trim(field);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw DataError("dataset line " + std::to_string(line_no) + ": cannot parse '" +
                    std::string(field) + "'");
  return value;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::map<ClassId, std::vector<Eigen::VectorXd>> rows;
  Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      fields.push_back(body.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2)
      throw DataError("dataset line " + std::to_string(line_no) + ": need a class id and features");
    const Index d = static_cast<Index>(fields.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim)
      throw DataError("dataset line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " features, got " + std::to_string(d));
    const auto id = parse_field<ClassId>(fields[0], line_no);
    Eigen::VectorXd x(d);
    for (Index i = 0; i < d; ++i) x(i) = parse_field<double>(fields[static_cast<std::size_t>(i + 1)], line_no);
    if (!x.allFinite())
      throw DataError("dataset line " + std::to_string(line_no) + ": non-finite feature");
    rows[id].push_back(std::move(x));
  }
  if (rows.empty()) throw DataError("dataset: no data rows");

  Dataset ds;
  ds.dim = dim;
  for (auto& [id, vecs] : rows) {
    Eigen::MatrixXd pts(dim, static_cast<Index>(vecs.size()));
    for (std::size_t j = 0; j < vecs.size(); ++j) pts.col(static_cast<Index>(j)) = vecs[j];
    ds.classes.emplace(id, std::move(pts));
  }
  return ds;
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  char buf[64];
  for (const auto& [id, pts] : ds.classes) {
    for (Index j = 0; j < pts.cols(); ++j) {
      out << id;
      for (Index i = 0; i < pts.rows(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, pts(i, j));
        out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      }
      out << '\n';
    }
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  try {
    return read_dataset_csv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file " + path.string());
  write_dataset_csv(out, ds);
  if (!out) throw DataError("error writing dataset file " + path.string());
}

ClassSplit split_classes(const Dataset& ds, double train_fraction, double validation_fraction) {
  if (train_fraction < 0.0 || validation_fraction < 0.0 || train_fraction + validation_fraction > 1.0)
    throw ContractError("split_classes: fractions must be non-negative and sum to <= 1");
  const auto ids = ds.class_ids();
  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
  const auto n_val = std::min(ids.size() - n_train,
                              static_cast<std::size_t>(std::llround(validation_fraction * n)));
  ClassSplit s;
  s.train.dim = s.validation.dim = s.test.dim = ds.dim;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Dataset& dst = i < n_train ? s.train : (i < n_train + n_val ? s.validation : s.test);
    dst.classes.emplace(ids[i], ds.classes.at(ids[i]));
  }
  return s;
}

namespace {

// First `k` entries of a uniformly shuffled 0..n-1.
std::vector<Index> choose(Index n, Index k, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

LabeledBatch sample_batch(const Dataset& ds, Index classes_per_batch, Index points_per_class,
                          std::uint64_t seed) {
  if (classes_per_batch < 1 || points_per_class < 1)
    throw ContractError("sample_batch: counts must be >= 1");
  const auto ids = ds.class_ids();
  if (static_cast<Index>(ids.size()) < classes_per_batch)
    throw ContractError("sample_batch: dataset has " + std::to_string(ids.size()) +
                        " classes, need " + std::to_string(classes_per_batch));
  std::mt19937_64 rng(seed);
  const auto chosen = choose(static_cast<Index>(ids.size()), classes_per_batch, rng);
  LabeledBatch b;
  b.points.resize(ds.dim, classes_per_batch * points_per_class);
  Index col = 0;
  for (Index c : chosen) {
    const ClassId id = ids[static_cast<std::size_t>(c)];
    const auto& pts = ds.classes.at(id);
    if (pts.cols() < points_per_class)
      throw ContractError("sample_batch: class " + std::to_string(id) + " has only " +
                          std::to_string(pts.cols()) + " points");
    for (Index j : choose(pts.cols(), points_per_class, rng)) {
      b.points.col(col++) = pts.col(j);
      b.labels.push_back(id);
    }
  }
  return b;
}

void EpisodeSpec::validate() const {
  if (n_way < 2) throw ContractError("episode: n_way must be >= 2");
  if (k_shot < 1) throw ContractError("episode: k_shot must be >= 1");
  if (n_query < 1) throw ContractError("episode: n_query must be >= 1");
}

Episode sample_episode(const Dataset& ds, const EpisodeSpec& spec) {
  spec.validate();
  const auto ids = ds.class_ids();
  if (static_cast<Index>(ids.size()) < spec.n_way)
    throw ContractError("episode: dataset has " + std::to_string(ids.size()) +
                        " classes, need n_way=" + std::to_string(spec.n_way));
  std::mt19937_64 rng(spec.seed);
  const auto chosen = choose(static_cast<Index>(ids.size()), spec.n_way, rng);
  const Index per_class = spec.k_shot + spec.n_query;

  Episode ep;
  ep.n_support = spec.n_way * spec.k_shot;
  ep.points.points.resize(ds.dim, spec.n_way * per_class);
  ep.points.labels.resize(static_cast<std::size_t>(spec.n_way * per_class));
  for (Index c = 0; c < spec.n_way; ++c) {
    const ClassId id = ids[static_cast<std::size_t>(chosen[static_cast<std::size_t>(c)])];
    const auto& pts = ds.classes.at(id);
    if (pts.cols() < per_class)
      throw ContractError("episode: class " + std::to_string(id) + " has fewer than " +
                          std::to_string(per_class) + " points");
    const auto picks = choose(pts.cols(), per_class, rng);
    for (Index s = 0; s < per_class; ++s) {
      const Index col = s < spec.k_shot ? c * spec.k_shot + s
                                        : ep.n_support + c * spec.n_query + (s - spec.k_shot);
      ep.points.points.col(col) = pts.col(picks[static_cast<std::size_t>(s)]);
      ep.points.labels[static_cast<std::size_t>(col)] = id;
    }
  }
  return ep;
}

EpisodeResult score_episode(const Model& model, const Episode& episode) {
  const auto& batch = episode.points;
  const Eigen::MatrixXd emb = model.embed_all(batch.points);
  Index correct = 0;
  std::vector<RankOrder> orders;
  for (Index q = episode.n_support; q < batch.size(); ++q) {
    const Eigen::VectorXd sims = query_similarities(emb, q);
    Index nearest = 0;
    for (Index s = 1; s < episode.n_support; ++s)
      if (sims(s) > sims(nearest)) nearest = s;
    correct += batch.labels[static_cast<std::size_t>(nearest)] == batch.labels[static_cast<std::size_t>(q)];
    orders.push_back(rank_by_similarity(q, sims));
  }
  const auto n_query = static_cast<double>(batch.size() - episode.n_support);
  return {static_cast<double>(correct) / n_query, mean_average_precision(batch, orders)};
}

EpisodeResult run_episode(const Model& model, const Dataset& ds, const EpisodeSpec& spec) {
  return score_episode(model, sample_episode(ds, spec));
}

MetricSummary summarize(std::span<const double> values) {
  if (values.size() < 2) throw ContractError("summarize: need at least 2 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

EvaluationSummary evaluate(const Model& model, const Dataset& ds, const EpisodeSpec& spec,
                           std::size_t n_episodes, unsigned threads) {
  if (n_episodes < 2) throw ContractError("evaluate: need at least 2 episodes");
  spec.validate();
  std::vector<double> acc(n_episodes), map(n_episodes);
  parallel_for(n_episodes, threads, [&](std::size_t i) {
    EpisodeSpec s = spec;
    s.seed = derive_seed(spec.seed, i);
    const auto r = run_episode(model, ds, s);
    acc[i] = r.accuracy;
    map[i] = r.retrieval_map;
  });
  return {summarize(acc), summarize(map), n_episodes};
}

}  // namespace rankopt
