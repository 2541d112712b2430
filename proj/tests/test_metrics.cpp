#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "adt/metrics.hpp"
#include "adt/rng.hpp"

using namespace adt;

TEST_CASE("iou basics") {
  Box a{0, 0, 1, 1};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, {2, 2, 3, 3}) == doctest::Approx(0.0));
  // unit squares offset by 0.5: intersection 0.5, union 1.5
  CHECK(iou(a, {0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("iou symmetry on random boxes") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto rand_box = [&] {
      double x1 = rng.next_double(), y1 = rng.next_double();
      return Box{x1, y1, x1 + rng.next_double(), y1 + rng.next_double()};
    };
    Box a = rand_box(), b = rand_box();
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)));
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("mean_iou weights sequences equally") {
  CHECK(mean_iou({{0.5, 1.0}}) == doctest::Approx(0.75));
  // sequence-weighted 0.375, not the frame-pooled 0.5
  CHECK(mean_iou({{0.5, 1.0}, {0.0}}) == doctest::Approx(0.375));
  CHECK(mean_iou({{0.3, 0.3}, {0.3}}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(mean_iou({}), std::invalid_argument);
  CHECK_THROWS_AS(mean_iou({{}}), std::invalid_argument);
}

TEST_CASE("mean_iou invariant to sequence and frame order") {
  std::vector<std::vector<double>> a = {{0.1, 0.9, 0.4}, {0.7, 0.2}};
  std::vector<std::vector<double>> b = {{0.2, 0.7}, {0.4, 0.1, 0.9}};
  CHECK(mean_iou(a) == doctest::Approx(mean_iou(b)));
}

TEST_CASE("pearson reference values") {
  CHECK(pearson({1, 2, 3}, {3, 5, 7}) == doctest::Approx(1.0));     // y = 2x + 1
  CHECK(pearson({1, 2, 3}, {-1, -2, -3}) == doctest::Approx(-1.0));  // y = -x
  CHECK(pearson({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(pearson({1}, {1}), std::invalid_argument);
}

TEST_CASE("ece hand-binned examples") {
  CHECK(ece({0.2, 0.8}, {0.2, 0.8}, 10) == doctest::Approx(0.0));
  CHECK(ece({1.0, 1.0}, {0.0, 0.0}, 10) == doctest::Approx(1.0));
  // two bins: |0.2-0.4|/2 + |0.8-0.6|/2
  CHECK(ece({0.2, 0.8}, {0.4, 0.6}, 2) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(ece({}, {}, 10), std::invalid_argument);
}

TEST_CASE("ece fixed point: confidences as qualities") {
  Rng rng(3);
  std::vector<double> c;
  for (int i = 0; i < 100; ++i) c.push_back(rng.next_double());
  CHECK(ece(c, c, 10) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pareto_frontier dominance") {
  CHECK(pareto_frontier({{0.5, 0.5, 0}}).size() == 1);
  auto f = pareto_frontier({{0.9, 0.1, 0}, {0.5, 0.5, 1}});  // first dominates both axes
  REQUIRE(f.size() == 1);
  CHECK(f[0].tag == 0);
  // pairwise-scan oracle example
  auto g = pareto_frontier({{0.9, 0.1, 0}, {0.8, 0.05, 1}, {0.7, 0.2, 2}});
  REQUIRE(g.size() == 2);
  CHECK(g[0].tag == 0);
  CHECK(g[1].tag == 1);
}

TEST_CASE("pareto_frontier output is dominance-free and complete") {
  Rng rng(8);
  std::vector<ParetoPoint> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({rng.next_double(), rng.next_double(), i});
  auto front = pareto_frontier(pts, true);
  auto dominates = [](const ParetoPoint& q, const ParetoPoint& p) {
    return q.primary >= p.primary && q.cost <= p.cost &&
           (q.primary > p.primary || q.cost < p.cost);
  };
  for (const auto& p : front)
    for (const auto& q : pts) CHECK_FALSE(dominates(q, p));
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) dominated = dominated || dominates(q, p);
    if (!dominated) {
      bool present = false;
      for (const auto& f : front) present = present || f.tag == p.tag;
      CHECK(present);
    }
  }
}

TEST_CASE("success_auc extremes") {
  CHECK(success_auc({1.0, 1.0}) == doctest::Approx(1.0));
  std::vector<double> zeros(10, 0.0);
  CHECK(success_auc(zeros) == doctest::Approx(1.0 / 21));  // only the 0 threshold succeeds
}
