#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "glassbox/attribution.hpp"

using namespace glassbox;

namespace {

attribution::CoalitionGame make_game(int k, std::function<double(std::uint64_t)> v) {
  attribution::CoalitionGame g;
  g.num_players = k;
  g.value = std::move(v);
  return g;
}

double coalition_sum(std::uint64_t mask, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (mask & (1ull << i)) s += c[i];
  return s;
}

// Direct definition: average marginal contribution over every permutation.
std::vector<double> shapley_by_permutations(const attribution::CoalitionGame& game) {
  const int k = game.num_players;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<std::size_t>(k), 0.0);
  long long count = 0;
  do {
    std::uint64_t mask = 0;
    double prev = game.value(0);
    for (int p : order) {
      mask |= 1ull << p;
      const double cur = game.value(mask);
      phi[static_cast<std::size_t>(p)] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : phi) v /= static_cast<double>(count);
  return phi;
}

}  // namespace

TEST_CASE("exact attribution satisfies the axioms on hand games") {
  // Symmetric game: v(S) = |S|^2 over three players.
  const auto square = make_game(3, [](std::uint64_t mask) {
    const double s = static_cast<double>(__builtin_popcountll(mask));
    return s * s;
  });
  const attribution::ShapleyResult sq = attribution::shapley_exact(square);
  REQUIRE(sq.values.size() == 3);
  CHECK(sq.method == attribution::ShapleyResult::Method::kExact);
  for (double v : sq.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));

  // Glove game with one left glove (player 0) and two right gloves.
  const auto glove = make_game(3, [](std::uint64_t mask) {
    const bool left = mask & 1ull;
    const bool right = mask & 6ull;
    return left && right ? 1.0 : 0.0;
  });
  const attribution::ShapleyResult gl = attribution::shapley_exact(glove);
  CHECK(gl.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(gl.values[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(gl.values[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  // Null player: adding player 2 never changes the value.
  const auto with_null = make_game(3, [](std::uint64_t mask) {
    return coalition_sum(mask & 3ull, {2.0, 5.0});
  });
  const attribution::ShapleyResult nu = attribution::shapley_exact(with_null);
  CHECK(nu.values[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(nu.values[1] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(nu.values[2] == doctest::Approx(0.0).epsilon(1e-12));

  attribution::CoalitionGame bad;
  bad.num_players = 0;
  bad.value = [](std::uint64_t) { return 0.0; };
  CHECK_THROWS_AS((void)attribution::shapley_exact(bad), std::invalid_argument);
}

TEST_CASE("exact attribution matches the all-permutations definition") {
  // Random-valued game on four players, fixed lookup table.
  const std::vector<double> table = {0.0,  1.3, 0.7, 2.9, 0.2, 1.9, 1.1, 3.5,
                                     -0.4, 1.0, 0.9, 2.2, 0.3, 2.8, 1.6, 4.1};
  const auto game = make_game(4, [&table](std::uint64_t mask) {
    return table[static_cast<std::size_t>(mask)];
  });
  const std::vector<double> oracle = shapley_by_permutations(game);
  const attribution::ShapleyResult got = attribution::shapley_exact(game);
  REQUIRE(got.values.size() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(got.values[i] == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-12));

  const double total = std::accumulate(got.values.begin(), got.values.end(), 0.0);
  CHECK(total == doctest::Approx(table[15] - table[0]).epsilon(1e-12));
}

TEST_CASE("sample budget matches the Hoeffding bound") {
  // ceil(1 / (2 * 0.05^2) * ln(2 / 0.05)) = ceil(737.78) = 738.
  CHECK(attribution::mc_budget(1.0, 0.05, 0.05) == 738);
  CHECK(attribution::mc_budget(2.0, 0.1, 0.01) == 1060);  // ceil(200 * ln 200)
  CHECK_THROWS_AS((void)attribution::mc_budget(0.0, 0.05, 0.05), std::invalid_argument);
  CHECK_THROWS_AS((void)attribution::mc_budget(1.0, 0.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS((void)attribution::mc_budget(1.0, 0.05, 1.5), std::invalid_argument);
}

TEST_CASE("sampled attribution telescopes and converges") {
  const std::vector<double> c = {0.3, 0.7, 1.1, 0.2};
  const auto game = make_game(4, [&c](std::uint64_t mask) {
    const double s = coalition_sum(mask, c);
    return s * s;
  });
  const attribution::ShapleyResult exact = attribution::shapley_exact(game);

  const attribution::ShapleyResult a = attribution::shapley_mc(game, 37, 5);
  const attribution::ShapleyResult b = attribution::shapley_mc(game, 37, 5);
  CHECK(a.method == attribution::ShapleyResult::Method::kMc);
  CHECK(a.permutations_used == 37);
  for (int i = 0; i < 4; ++i) CHECK(a.values[i] == b.values[i]);

  // Per-run telescoping: the estimates sum to v(full) - v(empty) exactly.
  const double total = std::accumulate(a.values.begin(), a.values.end(), 0.0);
  CHECK(total == doctest::Approx(game.value(15) - game.value(0)).epsilon(1e-12));

  const attribution::ShapleyResult big = attribution::shapley_mc(game, 4000, 6);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(big.values[i] - exact.values[i]) < 0.05);

  const attribution::ShapleyResult other = attribution::shapley_mc(game, 37, 99);
  bool differs = false;
  for (int i = 0; i < 4; ++i) differs = differs || other.values[i] != a.values[i];
  CHECK(differs);
}

TEST_CASE("antithetic pairing is exact for quadratic games") {
  // For v(S) = (sum of c_i)^2 the forward and reversed marginals of player i
  // average to c_i^2 + c_i (C - c_i) for every permutation, so one pair
  // already recovers the exact attribution.
  const std::vector<double> c = {0.3, 0.7, 1.1, 0.2};
  const auto game = make_game(4, [&c](std::uint64_t mask) {
    const double s = coalition_sum(mask, c);
    return s * s;
  });
  const attribution::ShapleyResult exact = attribution::shapley_exact(game);

  for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
    const attribution::ShapleyResult one = attribution::shapley_antithetic(game, 1, seed);
    CHECK(one.method == attribution::ShapleyResult::Method::kAntithetic);
    CHECK(one.permutations_used == 2);
    for (int i = 0; i < 4; ++i)
      CHECK(one.values[i] == doctest::Approx(exact.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("additive cost game attributes the column means") {
  attribution::PenaltyModel model;
  model.base = 1.5;
  model.samples.resize(4, 3);
  model.samples << 0.1, 0.4, 0.0,
                   0.3, 0.2, 0.6,
                   0.2, 0.0, 0.2,
                   0.0, 0.4, 0.4;

  const attribution::CoalitionGame game = attribution::game_cpi(model);
  CHECK(game.value(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(game.value(1) == doctest::Approx(1.5 + 0.15).epsilon(1e-12));
  CHECK(game.value(7) == doctest::Approx(1.5 + 0.15 + 0.25 + 0.3).epsilon(1e-12));

  const attribution::ShapleyResult phi = attribution::shapley_exact(game);
  CHECK(phi.values[0] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(phi.values[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(phi.values[2] == doctest::Approx(0.30).epsilon(1e-12));
}

TEST_CASE("throughput game averages reciprocal costs with shared draws") {
  attribution::PenaltyModel model;
  model.base = 2.0;
  model.samples.resize(2, 2);
  model.samples << 1.0, 3.0,
                   2.0, 0.0;

  const attribution::CoalitionGame game = attribution::game_throughput(model);
  CHECK(game.value(0) == 0.5);  // exactly 1/B, no sampling
  CHECK(game.value(1) == doctest::Approx((1.0 / 3.0 + 1.0 / 4.0) / 2.0).epsilon(1e-15));
  CHECK(game.value(2) == doctest::Approx((1.0 / 5.0 + 1.0 / 2.0) / 2.0).epsilon(1e-15));
  CHECK(game.value(3) == doctest::Approx((1.0 / 6.0 + 1.0 / 4.0) / 2.0).epsilon(1e-15));

  const attribution::ShapleyResult phi = attribution::shapley_exact(game);
  const double total = std::accumulate(phi.values.begin(), phi.values.end(), 0.0);
  CHECK(total == doctest::Approx(game.value(3) - 0.5).epsilon(1e-14));
}

TEST_CASE("marginal dominance implies attribution dominance") {
  attribution::PenaltyModel model;
  model.base = 1.0;
  model.samples.resize(3, 3);
  model.samples << 0.5, 0.2, 0.3,
                   0.6, 0.1, 0.1,
                   0.4, 0.3, 0.2;

  const attribution::CoalitionGame game = attribution::game_cpi(model);
  // Column means are 0.5, 0.2, 0.2: player 0 dominates both others.
  CHECK(attribution::dominance_check(game, 0, 1));
  CHECK(attribution::dominance_check(game, 0, 2));
  CHECK_FALSE(attribution::dominance_check(game, 1, 0));

  // Marginals that cross depending on the bystander: player 0 is stronger
  // alone, player 1 is stronger alongside player 2, so neither dominates.
  const std::vector<double> crossed = {0.0, 1.0, 0.2, 1.2, 0.3, 0.4, 0.8, 1.5};
  const auto mixed = make_game(3, [&crossed](std::uint64_t mask) {
    return crossed[static_cast<std::size_t>(mask)];
  });
  CHECK_FALSE(attribution::dominance_check(mixed, 0, 1));
  CHECK_FALSE(attribution::dominance_check(mixed, 1, 0));
  CHECK_THROWS_AS((void)attribution::dominance_check(mixed, 0, 0), std::invalid_argument);
}

TEST_CASE("convexity gap lands between its closed-form bounds") {
  attribution::PenaltyModel model;
  model.base = 1.0;
  model.samples.resize(2, 1);
  model.samples << 0.0, 2.0;

  const attribution::JensenGapResult r = attribution::jensen_gap_check(model);
  // E[1/(1+Z)] = (1 + 1/3)/2 = 2/3, 1/(1+E[Z]) = 1/2, Var(Z) = 1, max Z = 2.
  CHECK(r.gap == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(r.lower_bound == doctest::Approx(1.0 / 54.0).epsilon(1e-14));
  CHECK(r.upper_bound == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.within);

  // Constant penalties: no gap, both bounds collapse to zero.
  attribution::PenaltyModel flat;
  flat.base = 2.0;
  flat.samples.resize(3, 1);
  flat.samples << 0.4, 0.4, 0.4;
  const attribution::JensenGapResult z = attribution::jensen_gap_check(flat);
  CHECK(std::abs(z.gap) < 1e-15);
  CHECK(z.lower_bound < 1e-30);  // variance of identical rows is pure rounding
  CHECK(z.upper_bound < 1e-30);
  CHECK(z.within);
}

TEST_CASE("throughput attribution is minus the cost attribution over B squared, to first order") {
  attribution::PenaltyModel model;
  model.base = 1.0;
  const double t = 0.01;
  model.samples.resize(1, 3);
  model.samples << 0.15 * t, 0.25 * t, 0.35 * t;

  const attribution::FirstOrderResult r = attribution::first_order_check(model);
  CHECK(r.scale_estimate == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(r.max_deviation < 1e-4);

  // Larger penalties drift away from the linearization.
  attribution::PenaltyModel coarse = model;
  coarse.samples *= 50.0;
  const attribution::FirstOrderResult rc = attribution::first_order_check(coarse);
  CHECK(rc.max_deviation > r.max_deviation);
}

TEST_CASE("penalty samples load from CSV and reject negatives") {
  const std::string path = "attribution_test_penalties.csv";
  {
    std::ofstream out(path);
    out << "branch,icache,dcache\n";
    out << "0.1,0.2,0.3\n";
    out << "0.4,0.0,0.6\n";
  }
  const attribution::PenaltyModel m = attribution::load_penalty_csv(path, 1.25);
  CHECK(m.base == 1.25);
  REQUIRE(m.samples.rows() == 2);
  REQUIRE(m.samples.cols() == 3);
  CHECK(m.samples(1, 2) == doctest::Approx(0.6));
  std::remove(path.c_str());

  const std::string bad = "attribution_test_negative.csv";
  {
    std::ofstream out(bad);
    out << "a,b\n";
    out << "0.1,-0.2\n";
  }
  CHECK_THROWS((void)attribution::load_penalty_csv(bad, 1.0));
  std::remove(bad.c_str());
}
