#include "rankopt/errors.hpp"
#include "rankopt/metrics.hpp"
#include "rankopt/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace rankopt;

namespace {

// Query 0 with label 0; candidates 1..n with the given relevance pattern
// listed in rank order.
struct Fixture {
  std::vector<ClassId> labels;
  RankOrder order;
  RelevanceMask rel;
};

Fixture ranked(std::initializer_list<bool> pattern) {
  Fixture f;
  f.labels.push_back(0);
  f.order.query_index = 0;
  Index idx = 1;
  for (bool r : pattern) {
    f.labels.push_back(r ? 0 : 1);
    f.order.order.push_back(idx++);
  }
  f.rel = relevance_mask(f.labels, 0);
  return f;
}

}  // namespace

TEST_CASE("precision_at counts relevant points in the top j") {
  auto top = ranked({true, false, false});
  CHECK(precision_at(top.order, top.rel, 1) == 1.0);

  auto mixed = ranked({true, false, true});
  CHECK(precision_at(mixed.order, mixed.rel, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  auto none = ranked({false, false, false});
  for (Index j = 1; j <= 3; ++j) CHECK(precision_at(none.order, none.rel, j) == 0.0);
}

TEST_CASE("precision_at rejects bad arguments") {
  auto f = ranked({true, false});
  CHECK_THROWS_AS(precision_at(f.order, f.rel, 0), RangeError);
  CHECK_THROWS_AS(precision_at(f.order, f.rel, 3), RangeError);
  auto other = f.rel;
  other.query_index = 1;
  CHECK_THROWS_AS(precision_at(f.order, other, 1), ContractError);
}

TEST_CASE("average_precision examples") {
  auto perfect = ranked({true, true, false, false});
  CHECK(average_precision(perfect.order, perfect.rel) == 1.0);

  auto f = ranked({true, false, true, false});
  CHECK(average_precision(f.order, f.rel) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  for (int n = 1; n <= 9; ++n) {
    Fixture last;
    last.labels = {0};
    last.order.query_index = 0;
    for (int i = 1; i <= n; ++i) {
      last.labels.push_back(i == n ? 0 : 1);
      last.order.order.push_back(i);
    }
    last.rel = relevance_mask(last.labels, 0);
    CHECK(average_precision(last.order, last.rel) == doctest::Approx(1.0 / n).epsilon(1e-15));
  }

  auto empty = ranked({false, false});
  CHECK_THROWS_AS(average_precision(empty.order, empty.rel), NoRelevantPoints);
}

TEST_CASE("ap_task_loss is one minus AP") {
  auto perfect = ranked({true, true, false});
  CHECK(ap_task_loss(perfect.order, perfect.rel) == 0.0);
  auto f = ranked({true, false, true, false});
  CHECK(ap_task_loss(f.order, f.rel) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  auto last = ranked({false, false, false, true});
  CHECK(ap_task_loss(last.order, last.rel) == doctest::Approx(0.75).epsilon(1e-15));
  auto empty = ranked({false});
  CHECK_THROWS_AS(ap_task_loss(empty.order, empty.rel), NoRelevantPoints);
}

TEST_CASE("mean_average_precision") {
  SUBCASE("arithmetic mean of two queries") {
    // Query 0 ranks its partner first (AP 1); query 1 ranks it second of two
    // negatives-interleaved positions (AP 0.5).
    LabeledBatch b;
    b.points = Eigen::MatrixXd::Zero(1, 4);
    b.labels = {0, 0, 1, 1};
    RankOrder q0{0, {1, 2, 3}};
    RankOrder q1{1, {2, 0, 3}};
    const std::vector<RankOrder> orders{q0, q1};
    CHECK(mean_average_precision(b, orders) == 0.75);
  }
  SUBCASE("perfectly clustered batch ranked by similarity") {
    LabeledBatch b;
    b.points.resize(2, 6);
    b.points << 1, 1, 1, 0, 0, 0,
                0, 0, 0, 1, 1, 1;
    b.labels = {0, 0, 0, 1, 1, 1};
    std::vector<RankOrder> orders;
    for (Index q = 0; q < 6; ++q) {
      Eigen::VectorXd sims = b.points.transpose() * b.points.col(q);
      orders.push_back(rank_by_similarity(q, sims));
    }
    CHECK(mean_average_precision(b, orders) == 1.0);
  }
  SUBCASE("empty order list") {
    LabeledBatch b;
    b.points = Eigen::MatrixXd::Zero(1, 2);
    b.labels = {0, 1};
    CHECK_THROWS_AS(mean_average_precision(b, {}), ContractError);
  }
}

TEST_CASE("mAP agrees with the definition-level oracle on random batches") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const Index n = std::uniform_int_distribution<Index>(2, 12)(rng);
    LabeledBatch b;
    b.points = Eigen::MatrixXd::Zero(1, n);
    std::uniform_int_distribution<int> cls(0, 3);
    do {
      b.labels.assign(static_cast<std::size_t>(n), 0);
      for (auto& l : b.labels) l = cls(rng);
    } while (std::set<int>(b.labels.begin(), b.labels.end()).size() < 2);

    std::vector<RankOrder> orders;
    double oracle_sum = 0.0;
    for (Index q = 0; q < n; ++q) {
      if (relevance_mask(b.labels, q).count() == 0) continue;
      RankOrder o{q, {}};
      for (Index j = 0; j < n; ++j)
        if (j != q) o.order.push_back(j);
      std::shuffle(o.order.begin(), o.order.end(), rng);
      oracle_sum += oracle::average_precision(o.order, b.labels, q);
      orders.push_back(std::move(o));
    }
    if (orders.empty()) continue;
    CHECK(std::abs(mean_average_precision(b, orders) - oracle_sum / orders.size()) <= 1e-12);
  }
}

TEST_CASE("metric properties") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const Index n = std::uniform_int_distribution<Index>(3, 10)(rng);
    std::vector<ClassId> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = std::uniform_int_distribution<int>(0, 2)(rng);
    labels[1] = labels[0];
    const auto rel = relevance_mask(labels, 0);
    RankOrder o{0, std::vector<Index>(static_cast<std::size_t>(n - 1))};
    std::iota(o.order.begin(), o.order.end(), Index{1});
    std::shuffle(o.order.begin(), o.order.end(), rng);

    // j * Prec@j is an integer bounded by min(j, |relevant|).
    for (Index j = 1; j < n; ++j) {
      const double hits = j * precision_at(o, rel, j);
      CHECK(hits == doctest::Approx(std::round(hits)).epsilon(1e-12));
      CHECK(std::round(hits) <= static_cast<double>(std::min(j, rel.count())));
      CHECK(precision_at(o, rel, j) >= 0.0);
      CHECK(precision_at(o, rel, j) <= 1.0);
    }

    const double ap = average_precision(o, rel);

    // Shuffling the irrelevant points among their own positions keeps AP.
    auto shuffled = o;
    std::vector<std::size_t> slots;
    std::vector<Index> irrelevant;
    for (std::size_t k = 0; k < o.order.size(); ++k)
      if (!rel.contains(o.order[k])) {
        slots.push_back(k);
        irrelevant.push_back(o.order[k]);
      }
    std::shuffle(irrelevant.begin(), irrelevant.end(), rng);
    for (std::size_t s = 0; s < slots.size(); ++s) shuffled.order[slots[s]] = irrelevant[s];
    CHECK(average_precision(shuffled, rel) == ap);

    // Moving a relevant point up past an irrelevant neighbour never lowers AP.
    for (std::size_t k = 0; k + 1 < o.order.size(); ++k) {
      if (!rel.contains(o.order[k]) && rel.contains(o.order[k + 1])) {
        auto swapped = o;
        std::swap(swapped.order[k], swapped.order[k + 1]);
        CHECK(average_precision(swapped, rel) >= ap);
      }
    }
  }
}

TEST_CASE("rank_by_similarity breaks ties by ascending index") {
  Eigen::VectorXd sims(5);
  sims << 0.0, 0.5, 0.9, 0.5, 0.9;
  const auto o = rank_by_similarity(0, sims);
  CHECK(o.order == std::vector<Index>{2, 4, 1, 3});
}

TEST_CASE("batch validation") {
  LabeledBatch b;
  b.points = Eigen::MatrixXd::Zero(2, 3);
  b.labels = {0, 0, 0};
  CHECK_THROWS_AS(b.validate(), ContractError);
  b.labels = {0, 1};
  CHECK_THROWS_AS(b.validate(), ContractError);
  b.labels = {0, 1, 1};
  CHECK_NOTHROW(b.validate());
}
