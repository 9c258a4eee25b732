#include "rankopt/data.hpp"
#include "rankopt/errors.hpp"
#include "rankopt/oracle.hpp"
#include "rankopt/scoring.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

using namespace rankopt;

namespace {

Model identity_model(Index d) {
  auto m = Model::zeros({d, d});
  m.weight(0).setIdentity();
  return m;
}

// Class c sits exactly on basis vector e_c.
Dataset orthogonal_classes(Index n_classes, Index per_class) {
  Dataset ds;
  ds.dim = n_classes;
  for (Index c = 0; c < n_classes; ++c) {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(n_classes, per_class);
    pts.row(c).setOnes();
    ds.classes.emplace(static_cast<ClassId>(c), pts);
  }
  return ds;
}

}  // namespace

TEST_CASE("generate_synthetic") {
  SUBCASE("counts and determinism") {
    SyntheticSpec s{4, 50, 3, 1.0, 2.0, 17};
    const auto a = generate_synthetic(s);
    CHECK(a.num_points() == 200);
    CHECK(a.classes.size() == 4);
    CHECK(a.dim == 3);
    const auto b = generate_synthetic(s);
    for (const auto& [id, pts] : a.classes) CHECK(b.classes.at(id) == pts);
  }
  SUBCASE("vanishing spread collapses each class and keeps the means apart") {
    SyntheticSpec s{5, 10, 4, 1e-12, 3.0, 2};
    const auto ds = generate_synthetic(s);
    std::vector<Eigen::VectorXd> means;
    for (const auto& [id, pts] : ds.classes) {
      for (Index j = 1; j < pts.cols(); ++j) CHECK((pts.col(j) - pts.col(0)).norm() <= 1e-9);
      means.push_back(pts.col(0));
    }
    for (std::size_t i = 0; i < means.size(); ++i)
      for (std::size_t j = i + 1; j < means.size(); ++j)
        CHECK((means[i] - means[j]).norm() >= 3.0 - 1e-9);

    // Any batch ranked by raw-input cosine is perfect.
    const auto m = identity_model(4);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto b = sample_batch(ds, 3, 4, seed);
      const Eigen::MatrixXd emb = m.embed_all(b.points);
      std::vector<RankOrder> orders;
      for (Index q = 0; q < b.size(); ++q) orders.push_back(rank_by_similarity(q, query_similarities(emb, q)));
      CHECK(mean_average_precision(b, orders) == 1.0);
    }
  }
  SUBCASE("separation ten times the spread ranks well under raw cosine") {
    SyntheticSpec s{8, 40, 16, 1.0, 10.0, 4};
    const auto ds = generate_synthetic(s);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto b = sample_batch(ds, 4, 5, seed);
      double sum = 0.0;
      for (Index q = 0; q < b.size(); ++q) {
        std::vector<std::pair<double, Index>> by_sim;
        for (Index j = 0; j < b.size(); ++j)
          if (j != q) {
            const auto u = b.points.col(q), v = b.points.col(j);
            by_sim.emplace_back(-u.dot(v) / (u.norm() * v.norm()), j);
          }
        std::sort(by_sim.begin(), by_sim.end());
        std::vector<Index> order;
        for (const auto& [s_, j] : by_sim) order.push_back(j);
        sum += oracle::average_precision(order, b.labels, q);
      }
      total += sum / static_cast<double>(b.size());
    }
    CHECK(total / 50.0 >= 0.9);
  }
  SUBCASE("nuisance coordinates") {
    SyntheticSpec s{3, 200, 6, 0.1, 5.0, 8, 2, 3.0};
    const auto ds = generate_synthetic(s);
    for (const auto& [id, pts] : ds.classes) {
      const Eigen::VectorXd mean = pts.rowwise().mean();
      CHECK(mean.tail(4).cwiseAbs().maxCoeff() < 1.0);
      const double nuisance_sd = std::sqrt((pts.row(5).array() - mean(5)).square().mean());
      CHECK(nuisance_sd == doctest::Approx(3.0).epsilon(0.2));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(generate_synthetic({2, 5, 2, 0.0, 1.0, 0}), ContractError);
    CHECK_THROWS_AS(generate_synthetic({0, 5, 2, 1.0, 1.0, 0}), ContractError);
    CHECK_THROWS_AS(generate_synthetic({2, 5, 2, 1.0, 1.0, 0, 3, 0.0}), ContractError);
    CHECK_THROWS_AS(generate_synthetic({60, 5, 1, 1.0, 1.0, 0}), PlacementFailed);
  }
}

TEST_CASE("sample_batch") {
  const auto ds = generate_synthetic({8, 20, 3, 1.0, 4.0, 1});
  SUBCASE("shape") {
    const auto b = sample_batch(ds, 2, 2, 5);
    CHECK(b.size() == 4);
    for (const auto& d : decompose_batch(b)) CHECK(d.positives.size() == 1);
    CHECK(decompose_batch(b).size() == 4);
  }
  SUBCASE("same seed, same batch") {
    const auto a = sample_batch(ds, 3, 4, 99), b = sample_batch(ds, 3, 4, 99);
    CHECK(a.points == b.points);
    CHECK(a.labels == b.labels);
  }
  SUBCASE("no point drawn twice") {
    const auto b = sample_batch(ds, 4, 20, 3);
    for (Index i = 0; i < b.size(); ++i)
      for (Index j = i + 1; j < b.size(); ++j) CHECK(b.points.col(i) != b.points.col(j));
  }
  SUBCASE("class frequencies are uniform within three sigma") {
    std::map<ClassId, int> hist;
    const int n = 1000;
    for (int t = 0; t < n; ++t)
      for (ClassId c : sample_batch(ds, 2, 1, static_cast<std::uint64_t>(t)).labels) ++hist[c];
    const double p = 2.0 / 8.0;
    const double mean = n * p, sd = std::sqrt(n * p * (1.0 - p));
    CHECK(hist.size() == 8);
    for (const auto& [c, count] : hist) CHECK(std::abs(count - mean) <= 3.0 * sd);
  }
  SUBCASE("insufficient data") {
    CHECK_THROWS_AS(sample_batch(ds, 9, 2, 0), ContractError);
    CHECK_THROWS_AS(sample_batch(ds, 2, 21, 0), ContractError);
  }
}

TEST_CASE("dataset CSV") {
  const auto ds = generate_synthetic({3, 4, 5, 1.0, 2.0, 6});
  std::stringstream buf;
  write_dataset_csv(buf, ds);
  const auto back = read_dataset_csv(buf);
  CHECK(back.dim == 5);
  REQUIRE(back.classes.size() == 3);
  for (const auto& [id, pts] : ds.classes) CHECK(back.classes.at(id) == pts);

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_dataset_csv(in);
  };
  CHECK(parse("# comment\n1,0.5,2\n\n2,1,1\n1,3,4\n").classes.at(1).cols() == 2);
  CHECK_THROWS_WITH_AS(parse("1,2,3\n1,2\n"), doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(parse("1,2,x\n"), doctest::Contains("'x'"), DataError);
  CHECK_THROWS_AS(parse("1.5,2\n"), DataError);
  CHECK_THROWS_AS(parse("1\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv"), DataError);
}

TEST_CASE("split_classes is disjoint by sorted class id") {
  const auto ds = generate_synthetic({10, 2, 2, 1.0, 1.0, 0});
  const auto s = split_classes(ds, 0.5, 0.2);
  CHECK(s.train.class_ids() == std::vector<ClassId>{0, 1, 2, 3, 4});
  CHECK(s.validation.class_ids() == std::vector<ClassId>{5, 6});
  CHECK(s.test.class_ids() == std::vector<ClassId>{7, 8, 9});
  CHECK_THROWS_AS(split_classes(ds, 0.8, 0.3), ContractError);
}

TEST_CASE("episodes") {
  const auto ds = generate_synthetic({6, 15, 4, 1.0, 3.0, 12});
  const EpisodeSpec spec{4, 2, 3, 5};

  SUBCASE("layout") {
    const auto ep = sample_episode(ds, spec);
    CHECK(ep.n_support == 8);
    CHECK(ep.points.size() == 20);
    // Support and query points are distinct, and each class has k + q points.
    for (Index i = 0; i < ep.points.size(); ++i)
      for (Index j = i + 1; j < ep.points.size(); ++j)
        CHECK(ep.points.points.col(i) != ep.points.points.col(j));
    std::map<ClassId, int> count;
    for (auto l : ep.points.labels) ++count[l];
    CHECK(count.size() == 4);
    for (const auto& [c, n] : count) CHECK(n == 5);
  }
  SUBCASE("invalid episode shapes") {
    CHECK_THROWS_AS(sample_episode(ds, {1, 1, 1, 0}), ContractError);
    CHECK_THROWS_AS(sample_episode(ds, {2, 0, 1, 0}), ContractError);
    CHECK_THROWS_AS(sample_episode(ds, {2, 1, 0, 0}), ContractError);
    CHECK_THROWS_AS(sample_episode(ds, {7, 1, 1, 0}), ContractError);
    CHECK_THROWS_AS(sample_episode(ds, {2, 10, 6, 0}), ContractError);
  }
  SUBCASE("orthogonal zero-spread classes are solved exactly") {
    const auto ortho = orthogonal_classes(5, 6);
    const auto r = run_episode(identity_model(5), ortho, {5, 1, 3, 2});
    CHECK(r.accuracy == 1.0);
    CHECK(r.retrieval_map == 1.0);
    const auto summary = evaluate(identity_model(5), ortho, {5, 1, 3, 2}, 20);
    CHECK(summary.accuracy.mean == 1.0);
    CHECK(summary.accuracy.half_width == 0.0);
    CHECK(summary.retrieval_map.half_width == 0.0);
  }
  SUBCASE("retrieval mAP matches a definition-level recomputation") {
    const auto m = Model::glorot({4, 8, 4}, 3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EpisodeSpec s = spec;
      s.seed = seed;
      const auto ep = sample_episode(ds, s);
      const auto r = score_episode(m, ep);
      double sum = 0.0;
      for (Index q = ep.n_support; q < ep.points.size(); ++q) {
        std::vector<std::pair<double, Index>> by_sim;
        for (Index j = 0; j < ep.points.size(); ++j)
          if (j != q) by_sim.emplace_back(-similarity(m, Eigen::VectorXd(ep.points.points.col(q)),
                                                      Eigen::VectorXd(ep.points.points.col(j))), j);
        std::sort(by_sim.begin(), by_sim.end());
        std::vector<Index> order;
        for (const auto& [s_, j] : by_sim) order.push_back(j);
        sum += oracle::average_precision(order, ep.points.labels, q);
      }
      CHECK(std::abs(r.retrieval_map - sum / static_cast<double>(ep.points.size() - ep.n_support)) <= 1e-12);
    }
  }
  SUBCASE("indistinguishable classes give chance-level accuracy") {
    const auto same = generate_synthetic({10, 30, 4, 1.0, 0.0, 3});
    const auto s = evaluate(Model::glorot({4, 16, 8}, 1), same, {5, 1, 5, 8}, 1000);
    CHECK(std::abs(s.accuracy.mean - 0.2) <= 0.02);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("closed-form summary") {
    const std::vector<double> v{0.0, 1.0};
    const auto s = summarize(v);
    CHECK(s.mean == 0.5);
    CHECK(s.half_width == doctest::Approx(1.96 * std::sqrt(0.5) / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(summarize(std::vector<double>{1.0}), ContractError);
  }
  SUBCASE("reproducible and independent of thread count") {
    const auto ds = generate_synthetic({6, 10, 4, 1.0, 1.0, 2});
    const auto m = Model::glorot({4, 8, 4}, 5);
    const EpisodeSpec spec{3, 1, 2, 77};
    const auto a = evaluate(m, ds, spec, 200, 1);
    const auto b = evaluate(m, ds, spec, 200, 4);
    CHECK(a.accuracy.mean == b.accuracy.mean);
    CHECK(a.accuracy.half_width == b.accuracy.half_width);
    CHECK(a.retrieval_map.mean == b.retrieval_map.mean);
    CHECK(a.retrieval_map.half_width == b.retrieval_map.half_width);
    CHECK_THROWS_AS(evaluate(m, ds, spec, 1), ContractError);
  }
}
