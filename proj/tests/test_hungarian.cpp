#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "olpi/hungarian.hpp"
#include "olpi/rng.hpp"

using namespace olpi;

namespace {

double permutation_minimum(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("dominant diagonal yields the identity matching") {
  const std::vector<std::vector<double>> cost{{0.0, 5.0, 5.0}, {5.0, 0.0, 5.0}, {5.0, 5.0, 0.0}};
  const auto result = hungarian_2d_assignment(cost);
  CHECK(result.assignment == std::vector<int>{0, 1, 2});
  CHECK(result.cost == 0.0);
}

TEST_CASE("all-equal matrix costs m*c under any matching") {
  const std::vector<std::vector<double>> cost(4, std::vector<double>(4, 2.5));
  const auto result = hungarian_2d_assignment(cost);
  CHECK(result.cost == 10.0);
  std::vector<char> used(4, 0);
  for (int j : result.assignment) {
    REQUIRE(j >= 0);
    REQUIRE(j < 4);
    CHECK_FALSE(used[static_cast<std::size_t>(j)]);
    used[static_cast<std::size_t>(j)] = 1;
  }
}

TEST_CASE("random 6x6 matrices match the 720-permutation minimum") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cost(6, std::vector<double>(6));
    for (auto& row : cost) {
      for (double& v : row) v = rng.next_double();
    }
    const auto result = hungarian_2d_assignment(cost);
    CHECK(std::abs(result.cost - permutation_minimum(cost)) <= 1e-12);
  }
}

TEST_CASE("negative entries are handled") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    std::vector<std::vector<double>> cost(5, std::vector<double>(5));
    for (auto& row : cost) {
      for (double& v : row) v = rng.next_double() * 2.0 - 1.0;
    }
    const auto result = hungarian_2d_assignment(cost);
    CHECK(std::abs(result.cost - permutation_minimum(cost)) <= 1e-12);
  }
}

TEST_CASE("non-square and non-finite inputs are rejected") {
  CHECK_THROWS((void)hungarian_2d_assignment({{1.0, 2.0}, {3.0}}));
  CHECK_THROWS((void)hungarian_2d_assignment({{1.0, std::numeric_limits<double>::infinity()}, {1.0, 1.0}}));
  CHECK_THROWS((void)hungarian_2d_assignment({}));
}

TEST_CASE("1x1 matrix") {
  const auto result = hungarian_2d_assignment({{3.25}});
  CHECK(result.assignment == std::vector<int>{0});
  CHECK(result.cost == 3.25);
}
