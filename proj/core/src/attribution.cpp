#include "glassbox/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "glassbox/csv.hpp"
#include "glassbox/rng.hpp"

namespace glassbox::attribution {
namespace {

std::vector<int> random_permutation(int k, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.bounded(i))]);
  return order;
}

// Marginals along one permutation order, telescoping from v(empty).
void walk_marginals(const CoalitionGame& game, const std::vector<int>& order, double v_empty,
                    std::vector<double>* marginals) {
  std::uint64_t mask = 0;
  double prev = v_empty;
  for (int p : order) {
    mask |= 1ull << p;
    const double val = game.value(mask);
    (*marginals)[static_cast<std::size_t>(p)] = val - prev;
    prev = val;
  }
}

}  // namespace

void CoalitionGame::validate() const {
  if (num_players < 1 || num_players > 63)
    throw std::invalid_argument("CoalitionGame: num_players must lie in [1, 63]");
  if (!value) throw std::invalid_argument("CoalitionGame: missing value function");
}

ShapleyResult shapley_exact(const CoalitionGame& game) {
  game.validate();
  const int k = game.num_players;
  if (k > 20)
    throw std::invalid_argument(
        "shapley_exact: k > 20 needs 2^k evaluations; use shapley_mc instead");

  const std::uint64_t subsets = 1ull << k;
  std::vector<double> v(subsets);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) v[mask] = game.value(mask);

  // weight[s] = s! (k-1-s)! / k!
  std::vector<long double> weight(static_cast<std::size_t>(k));
  {
    std::vector<long double> fact(static_cast<std::size_t>(k) + 1, 1.0L);
    for (std::size_t i = 1; i < fact.size(); ++i)
      fact[i] = fact[i - 1] * static_cast<long double>(i);
    for (int s = 0; s < k; ++s)
      weight[static_cast<std::size_t>(s)] =
          fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(k - 1 - s)] /
          fact[static_cast<std::size_t>(k)];
  }

  ShapleyResult result;
  result.method = ShapleyResult::Method::kExact;
  result.values.assign(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    const std::uint64_t bit = 1ull << i;
    long double phi = 0.0L;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const int size = __builtin_popcountll(mask);
      phi += weight[static_cast<std::size_t>(size)] *
             static_cast<long double>(v[mask | bit] - v[mask]);
    }
    result.values[static_cast<std::size_t>(i)] = static_cast<double>(phi);
  }
  return result;
}

long long mc_budget(double width, double epsilon, double delta) {
  if (!(width > 0.0)) throw std::invalid_argument("mc_budget: width must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("mc_budget: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("mc_budget: delta must lie in (0,1)");
  return static_cast<long long>(
      std::ceil(width * width / (2.0 * epsilon * epsilon) * std::log(2.0 / delta)));
}

ShapleyResult shapley_mc(const CoalitionGame& game, long long permutations, std::uint64_t seed) {
  game.validate();
  if (permutations < 1) throw std::invalid_argument("shapley_mc: permutations must be >= 1");
  const int k = game.num_players;
  const double v_empty = game.value(0);

  Rng rng(seed);
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  std::vector<double> marginals(static_cast<std::size_t>(k));
  for (long long m = 0; m < permutations; ++m) {
    const std::vector<int> order = random_permutation(k, rng);
    walk_marginals(game, order, v_empty, &marginals);
    for (int i = 0; i < k; ++i)
      sums[static_cast<std::size_t>(i)] += marginals[static_cast<std::size_t>(i)];
  }

  ShapleyResult result;
  result.method = ShapleyResult::Method::kMc;
  result.permutations_used = permutations;
  result.values.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    result.values[static_cast<std::size_t>(i)] =
        sums[static_cast<std::size_t>(i)] / static_cast<double>(permutations);
  return result;
}

ShapleyResult shapley_antithetic(const CoalitionGame& game, long long pairs, std::uint64_t seed) {
  game.validate();
  if (pairs < 1) throw std::invalid_argument("shapley_antithetic: pairs must be >= 1");
  const int k = game.num_players;
  const double v_empty = game.value(0);

  Rng rng(seed);
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  std::vector<double> forward(static_cast<std::size_t>(k));
  std::vector<double> backward(static_cast<std::size_t>(k));
  for (long long m = 0; m < pairs; ++m) {
    std::vector<int> order = random_permutation(k, rng);
    walk_marginals(game, order, v_empty, &forward);
    std::reverse(order.begin(), order.end());
    walk_marginals(game, order, v_empty, &backward);
    for (int i = 0; i < k; ++i)
      sums[static_cast<std::size_t>(i)] +=
          0.5 * (forward[static_cast<std::size_t>(i)] + backward[static_cast<std::size_t>(i)]);
  }

  ShapleyResult result;
  result.method = ShapleyResult::Method::kAntithetic;
  result.permutations_used = 2 * pairs;
  result.values.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    result.values[static_cast<std::size_t>(i)] =
        sums[static_cast<std::size_t>(i)] / static_cast<double>(pairs);
  return result;
}

void PenaltyModel::validate() const {
  if (!(base > 0.0)) throw std::invalid_argument("PenaltyModel: base must be > 0");
  if (samples.rows() < 1 || samples.cols() < 1)
    throw std::invalid_argument("PenaltyModel: need at least one sample and one event");
  if (!samples.allFinite()) throw std::invalid_argument("PenaltyModel: non-finite samples");
  if ((samples.array() < 0.0).any())
    throw std::invalid_argument("PenaltyModel: penalties must be nonnegative samplewise");
}

PenaltyModel load_penalty_csv(const std::string& path, double base) {
  PenaltyModel model;
  model.base = base;
  model.samples = csv::numeric_matrix(csv::read_table(path));
  model.validate();
  return model;
}

CoalitionGame game_cpi(const PenaltyModel& model) {
  model.validate();
  const int k = static_cast<int>(model.samples.cols());
  if (k > 63) throw std::invalid_argument("game_cpi: more than 63 events");
  std::vector<double> means(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) means[static_cast<std::size_t>(i)] = model.samples.col(i).mean();
  const double base = model.base;

  CoalitionGame game;
  game.num_players = k;
  game.description = "cpi";
  game.value = [base, means](std::uint64_t mask) {
    double total = base;
    for (std::size_t i = 0; i < means.size(); ++i)
      if (mask & (1ull << i)) total += means[i];
    return total;
  };
  return game;
}

CoalitionGame game_throughput(const PenaltyModel& model) {
  model.validate();
  const int k = static_cast<int>(model.samples.cols());
  if (k > 63) throw std::invalid_argument("game_throughput: more than 63 events");
  const auto samples = std::make_shared<Eigen::MatrixXd>(model.samples);
  const double base = model.base;

  CoalitionGame game;
  game.num_players = k;
  game.description = "throughput";
  game.value = [base, samples](std::uint64_t mask) {
    if (mask == 0) return 1.0 / base;
    const Eigen::Index n = samples->rows();
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      double denom = base;
      for (Eigen::Index c = 0; c < samples->cols(); ++c)
        if (mask & (1ull << c)) denom += (*samples)(r, c);
      total += 1.0 / denom;
    }
    return total / static_cast<double>(n);
  };
  return game;
}

JensenGapResult jensen_gap_check(const PenaltyModel& model) {
  model.validate();
  const Eigen::VectorXd z = model.samples.rowwise().sum();
  const double n = static_cast<double>(z.size());
  const double mean_z = z.mean();
  const double var_z = (z.array() - mean_z).square().sum() / n;
  const double max_z = z.maxCoeff();
  const double mean_inv = (model.base + z.array()).inverse().sum() / n;

  JensenGapResult result;
  result.gap = mean_inv - 1.0 / (model.base + mean_z);
  result.lower_bound = 0.5 * var_z / std::pow(model.base + max_z, 3);
  result.upper_bound = 0.5 * var_z / std::pow(model.base, 3);
  result.within = result.gap >= result.lower_bound - 1e-12 &&
                  result.gap <= result.upper_bound + 1e-12;
  return result;
}

FirstOrderResult first_order_check(const PenaltyModel& model) {
  const ShapleyResult etd = shapley_exact(game_throughput(model));
  const ShapleyResult psi = shapley_exact(game_cpi(model));
  const double b2 = model.base * model.base;

  FirstOrderResult result;
  double dot = 0.0, psi_sq = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    const double dev = std::abs(etd.values[i] + psi.values[i] / b2);
    result.max_deviation = std::max(result.max_deviation, dev);
    dot += psi.values[i] * etd.values[i];
    psi_sq += psi.values[i] * psi.values[i];
  }
  result.scale_estimate = psi_sq > 0.0 ? dot / psi_sq : 0.0;
  return result;
}

bool dominance_check(const CoalitionGame& game, int i, int j) {
  game.validate();
  const int k = game.num_players;
  if (k > 20) throw std::invalid_argument("dominance_check: k must be <= 20");
  if (i < 0 || i >= k || j < 0 || j >= k || i == j)
    throw std::invalid_argument("dominance_check: bad player indices");

  const std::uint64_t bit_i = 1ull << i;
  const std::uint64_t bit_j = 1ull << j;
  const std::uint64_t subsets = 1ull << k;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    if (mask & (bit_i | bit_j)) continue;
    const double base = game.value(mask);
    if (game.value(mask | bit_i) - base < game.value(mask | bit_j) - base) return false;
  }

  const ShapleyResult exact = shapley_exact(game);
  const double phi_i = exact.values[static_cast<std::size_t>(i)];
  const double phi_j = exact.values[static_cast<std::size_t>(j)];
  const double slack = 1e-12 * std::max(1.0, std::max(std::abs(phi_i), std::abs(phi_j)));
  if (phi_i < phi_j - slack)
    throw std::logic_error("dominance_check: marginal dominance without Shapley dominance");
  return true;
}

}  // namespace glassbox::attribution
