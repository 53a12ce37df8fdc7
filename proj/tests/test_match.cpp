#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "emdoa/match.hpp"

using namespace emdoa;
using Catch::Approx;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("exact estimate matches with the identity assignment") {
  MatchResult r = match_and_error(vec2(60.0, 90.0), vec2(60.0, 90.0));
  CHECK(r.permutation == std::vector<Index>{0, 1});
  CHECK(r.errors_deg.norm() == 0.0);
}

TEST_CASE("reversed estimate matches with the reversing assignment") {
  MatchResult r = match_and_error(vec2(90.0, 60.0), vec2(60.0, 90.0));
  CHECK(r.permutation == std::vector<Index>{1, 0});
  CHECK(r.errors_deg.norm() == 0.0);
}

TEST_CASE("nearest assignment yields signed errors") {
  MatchResult r = match_and_error(vec2(61.0, 89.0), vec2(60.0, 90.0));
  CHECK(r.permutation == std::vector<Index>{0, 1});
  CHECK(r.errors_deg[0] == Approx(1.0));
  CHECK(r.errors_deg[1] == Approx(-1.0));
}

TEST_CASE("assignment crosses over when that lowers the total cost") {
  MatchResult r = match_and_error(vec2(75.0, 62.0), vec2(60.0, 90.0));
  CHECK(r.permutation == std::vector<Index>{1, 0});
  CHECK(r.errors_deg[0] == Approx(2.0));
  CHECK(r.errors_deg[1] == Approx(-15.0));
}

TEST_CASE("matched cost is invariant to shuffling the estimate") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(5.0, 175.0);
  for (int rep = 0; rep < 30; ++rep) {
    VectorXd truth(3), est(3);
    for (int k = 0; k < 3; ++k) {
      truth[k] = angle(rng);
      est[k] = angle(rng);
    }
    const double cost = match_and_error(est, truth).errors_deg.squaredNorm();
    VectorXd shuffled(3);
    shuffled << est[2], est[0], est[1];
    CHECK(match_and_error(shuffled, truth).errors_deg.squaredNorm() == Approx(cost));
  }
}

TEST_CASE("wanted classification is boundary inclusive") {
  CHECK(classify_wanted(vec2(60.0, 90.0), vec2(60.0, 90.0)));
  CHECK(classify_wanted(vec2(64.9, 94.9), vec2(60.0, 90.0)));
  CHECK(classify_wanted(vec2(65.0, 95.0), vec2(60.0, 90.0)));
  CHECK_FALSE(classify_wanted(vec2(80.0, 90.0), vec2(60.0, 90.0)));
  CHECK_FALSE(classify_wanted(vec2(64.9, 95.1), vec2(60.0, 90.0)));
  CHECK(classify_wanted(vec2(62.0, 90.0), vec2(60.0, 90.0), 2.0));
  CHECK_THROWS_AS(classify_wanted(vec2(62.0, 90.0), vec2(60.0, 90.0), 0.0),
                  std::invalid_argument);
}

TEST_CASE("pooled RMSE matches the hand-computed fixture") {
  std::vector<VectorXd> errors = {vec2(1.0, -1.0), vec2(2.0, 0.0), vec2(0.0, 3.0)};
  CHECK(pooled_rmse(errors) == Approx(std::sqrt(15.0 / 6.0)));
  VectorXd per = per_source_rmse(errors);
  CHECK(per[0] == Approx(std::sqrt(5.0 / 3.0)));
  CHECK(per[1] == Approx(std::sqrt(10.0 / 3.0)));
}

TEST_CASE("single source and size validation") {
  MatchResult r = match_and_error(VectorXd::Constant(1, 71.5), VectorXd::Constant(1, 70.0));
  CHECK(r.errors_deg[0] == Approx(1.5));
  CHECK_THROWS_AS(match_and_error(vec2(1.0, 2.0), VectorXd::Constant(1, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(pooled_rmse({}), std::invalid_argument);
}
