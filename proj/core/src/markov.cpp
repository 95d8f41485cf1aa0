#include "glassbox/markov.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glassbox::markov {
namespace {

int parse_outcome(const std::string& token, int lineno) {
  if (token == "N" || token == "n" || token == "0") return 0;
  if (token == "T" || token == "t" || token == "1") return 1;
  throw std::runtime_error("automaton: bad outcome '" + token + "' at line " +
                           std::to_string(lineno));
}

}  // namespace

MarkovBranchProcess::MarkovBranchProcess(double alpha_in, double beta_in)
    : alpha(alpha_in), beta(beta_in) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("MarkovBranchProcess: alpha and beta must lie in (0,1)");
}

MarkovBranchProcess iid_process(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("iid_process: p must lie in (0,1)");
  return MarkovBranchProcess(p, 1.0 - p);
}

void PredictorAutomaton::validate() const {
  if (num_states < 1) throw std::invalid_argument("PredictorAutomaton: need at least one state");
  if (static_cast<int>(predict.size()) != num_states ||
      static_cast<int>(update.size()) != num_states)
    throw std::invalid_argument("PredictorAutomaton: predict/update must cover every state");
  if (initial_state < 0 || initial_state >= num_states)
    throw std::invalid_argument("PredictorAutomaton: initial_state out of range");
  for (int s = 0; s < num_states; ++s) {
    if (predict[s] != 0 && predict[s] != 1)
      throw std::invalid_argument("PredictorAutomaton: prediction must be 0 or 1");
    for (int y = 0; y < 2; ++y)
      if (update[s][y] < 0 || update[s][y] >= num_states)
        throw std::invalid_argument("PredictorAutomaton: update target out of range");
  }
}

PredictorAutomaton two_bit_automaton() {
  PredictorAutomaton a;
  a.num_states = 4;
  a.predict = {0, 0, 1, 1};
  a.update.resize(4);
  for (int s = 0; s < 4; ++s) {
    a.update[s][0] = s > 0 ? s - 1 : 0;
    a.update[s][1] = s < 3 ? s + 1 : 3;
  }
  a.initial_state = 1;  // WN
  return a;
}

PredictorAutomaton static_automaton(int prediction) {
  if (prediction != 0 && prediction != 1)
    throw std::invalid_argument("static_automaton: prediction must be 0 or 1");
  PredictorAutomaton a;
  a.num_states = 1;
  a.predict = {prediction};
  a.update = {{0, 0}};
  a.initial_state = 0;
  return a;
}

void JointChain::validate() const {
  const auto n = transition.rows();
  if (n != transition.cols() || n != 2 * num_predictor_states)
    throw std::invalid_argument("JointChain: matrix must be 2s x 2s");
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (transition(i, j) < 0.0) throw std::invalid_argument("JointChain: negative entry");
      sum += transition(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("JointChain: row " + std::to_string(i) + " does not sum to 1");
  }
}

JointChain build_joint_chain(const MarkovBranchProcess& proc, const PredictorAutomaton& pred) {
  pred.validate();
  const int s = pred.num_states;
  JointChain chain;
  chain.num_predictor_states = s;
  chain.transition = Eigen::MatrixXd::Zero(2 * s, 2 * s);
  for (int state = 0; state < s; ++state) {
    for (int y = 0; y < 2; ++y) {
      const int row = JointChain::index(state, y);
      const int next_state = pred.update[state][y];
      const double p_taken = proc.next_taken_prob(y);
      chain.transition(row, JointChain::index(next_state, 0)) += 1.0 - p_taken;
      chain.transition(row, JointChain::index(next_state, 1)) += p_taken;
    }
  }
  return chain;
}

StationaryDistribution stationary(const JointChain& chain) {
  chain.validate();
  const Eigen::Index n = chain.transition.rows();
  Eigen::MatrixXd a = chain.transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw std::runtime_error("stationary: singular balance system (chain not ergodic)");
  Eigen::VectorXd pi = lu.solve(b);

  const double residual = (chain.transition.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
  if (!pi.allFinite() || residual > 1e-10)
    throw std::runtime_error("stationary: fixed-point residual too large");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < -1e-12) throw std::runtime_error("stationary: negative probability");
    if (pi(i) < 0.0) pi(i) = 0.0;
  }
  pi /= pi.sum();
  StationaryDistribution dist;
  dist.pi = std::move(pi);
  return dist;
}

double mispred_rate_general(const MarkovBranchProcess& proc, const PredictorAutomaton& pred,
                            TimingConvention convention) {
  const JointChain chain = build_joint_chain(proc, pred);
  const StationaryDistribution dist = stationary(chain);
  double rate = 0.0;
  for (int state = 0; state < pred.num_states; ++state) {
    for (int y = 0; y < 2; ++y) {
      const double mass = dist.pi(JointChain::index(state, y));
      if (convention == TimingConvention::kPredictCurrent) {
        if (pred.predict[state] != y) rate += mass;
      } else {
        const double p_taken = proc.next_taken_prob(y);
        rate += mass * (pred.predict[state] == 1 ? 1.0 - p_taken : p_taken);
      }
    }
  }
  if (rate < 0.0) rate = 0.0;
  if (rate > 1.0) rate = 1.0;
  return rate;
}

double mispred_rate_closed_form(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("mispred_rate_closed_form: alpha, beta must lie in (0,1)");
  const double num = alpha * beta * (alpha + beta - 2.0) * (alpha + beta - 2.0);
  const double den =
      (alpha + beta) * (alpha * alpha * beta + alpha * beta * beta - 3.0 * alpha * beta + 1.0);
  return num / den;
}

double mispred_rate_iid(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("mispred_rate_iid: p must lie in (0,1)");
  return p * (1.0 - p) / (2.0 * p * p - 2.0 * p + 1.0);
}

double cpi_markov(double f, double P, const MarkovBranchProcess& proc,
                  const PredictorAutomaton& pred) {
  if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("cpi_markov: f must be in [0,1]");
  if (!(P >= 0.0)) throw std::invalid_argument("cpi_markov: P must be >= 0");
  return 1.0 + f * P * mispred_rate_general(proc, pred);
}

PredictorAutomaton parse_automaton(const std::string& text) {
  PredictorAutomaton a;
  std::vector<bool> have_predict;
  std::vector<std::array<bool, 2>> have_update;
  bool have_states = false;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string directive;
    if (!(ls >> directive)) continue;

    if (directive == "states") {
      int s = 0;
      if (!(ls >> s) || s < 1)
        throw std::runtime_error("automaton: bad state count at line " + std::to_string(lineno));
      a.num_states = s;
      a.predict.assign(s, 0);
      a.update.assign(s, {0, 0});
      have_predict.assign(s, false);
      have_update.assign(s, {false, false});
      have_states = true;
      continue;
    }
    if (!have_states)
      throw std::runtime_error("automaton: 'states' must come first (line " +
                               std::to_string(lineno) + ")");

    if (directive == "initial") {
      if (!(ls >> a.initial_state))
        throw std::runtime_error("automaton: bad initial state at line " + std::to_string(lineno));
    } else if (directive == "predict") {
      int state = 0;
      std::string outcome;
      if (!(ls >> state >> outcome) || state < 0 || state >= a.num_states)
        throw std::runtime_error("automaton: bad predict line " + std::to_string(lineno));
      a.predict[state] = parse_outcome(outcome, lineno);
      have_predict[state] = true;
    } else if (directive == "update") {
      int state = 0, next = 0;
      std::string outcome;
      if (!(ls >> state >> outcome >> next) || state < 0 || state >= a.num_states)
        throw std::runtime_error("automaton: bad update line " + std::to_string(lineno));
      const int y = parse_outcome(outcome, lineno);
      a.update[state][y] = next;
      have_update[state][y] = true;
    } else {
      throw std::runtime_error("automaton: unknown directive '" + directive + "' at line " +
                               std::to_string(lineno));
    }
  }
  if (!have_states) throw std::runtime_error("automaton: missing 'states' directive");
  for (int s = 0; s < a.num_states; ++s) {
    if (!have_predict[s])
      throw std::runtime_error("automaton: missing predict entry for state " + std::to_string(s));
    for (int y = 0; y < 2; ++y)
      if (!have_update[s][y])
        throw std::runtime_error("automaton: missing update entry for state " + std::to_string(s) +
                                 " outcome " + (y ? "T" : "N"));
  }
  a.validate();
  return a;
}

PredictorAutomaton load_automaton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("automaton: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_automaton(buf.str());
}

void save_automaton(const PredictorAutomaton& pred, const std::string& path) {
  pred.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("automaton: cannot write " + path);
  out << "states " << pred.num_states << "\n";
  out << "initial " << pred.initial_state << "\n";
  for (int s = 0; s < pred.num_states; ++s)
    out << "predict " << s << " " << (pred.predict[s] ? "T" : "N") << "\n";
  for (int s = 0; s < pred.num_states; ++s)
    for (int y = 0; y < 2; ++y)
      out << "update " << s << " " << (y ? "T" : "N") << " " << pred.update[s][y] << "\n";
  if (!out) throw std::runtime_error("automaton: write failed for " + path);
}

}  // namespace glassbox::markov
