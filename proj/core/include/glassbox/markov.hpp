#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glassbox::markov {

// Branch outcomes are encoded as integers throughout: 0 = not taken (N),
// 1 = taken (T).

// Two-state outcome chain: alpha = P[N -> T], beta = P[T -> N].
// Both must lie strictly inside (0,1) so the chain is ergodic.
struct MarkovBranchProcess {
  MarkovBranchProcess(double alpha, double beta);

  double alpha;
  double beta;

  double stationary_taken() const { return alpha / (alpha + beta); }

  // P[next outcome is taken | current outcome].
  double next_taken_prob(int outcome) const { return outcome == 0 ? alpha : 1.0 - beta; }
};

// An i.i.d. taken probability p expressed as a chain: alpha = p, beta = 1-p.
MarkovBranchProcess iid_process(double p);

// Deterministic finite-state predictor: a prediction per state and a total
// update map over (state, outcome).
struct PredictorAutomaton {
  int num_states = 0;
  std::vector<int> predict;                // state -> 0/1
  std::vector<std::array<int, 2>> update;  // [state][outcome] -> next state
  int initial_state = 0;

  void validate() const;  // throws std::invalid_argument on violation
};

// The four-state saturating counter SN(0), WN(1), WT(2), ST(3): states 0,1
// predict not-taken, 2,3 predict taken; a taken outcome steps toward ST and
// a not-taken outcome toward SN, saturating at the ends.  Starts at WN.
PredictorAutomaton two_bit_automaton();

// Single-state predictor that always emits `prediction`.
PredictorAutomaton static_automaton(int prediction);

// Chain over joint states (predictor state S, outcome Y).  S is the
// predictor state built from all outcomes before the current one, i.e. it
// has not yet absorbed Y.  Transition: S' = update(S, Y) deterministically,
// Y' drawn from the outcome chain conditioned on Y.
struct JointChain {
  Eigen::MatrixXd transition;  // 2s x 2s, row stochastic
  int num_predictor_states = 0;

  static int index(int state, int outcome) { return 2 * state + outcome; }

  void validate() const;  // rows sum to 1 within 1e-12, entries >= 0
};

JointChain build_joint_chain(const MarkovBranchProcess& proc, const PredictorAutomaton& pred);

struct StationaryDistribution {
  Eigen::VectorXd pi;
};

// Direct dense solve of pi^T P = pi^T with the normalization sum(pi) = 1
// replacing one balance row.  Throws std::runtime_error when the system is
// singular (non-ergodic chain) or the residual exceeds 1e-10.
StationaryDistribution stationary(const JointChain& chain);

// Which outcome the prediction made from S is scored against.  kPredictCurrent
// scores predict(S) against the joint state's own outcome Y (the first
// outcome S has not seen); kPredictNext scores it against the following
// outcome Y', skipping the intervening update.  kPredictCurrent is the
// convention that reproduces mispred_rate_closed_form (validated to 1e-10 on
// a 19x19 grid); kPredictNext is kept for that comparison test.
enum class TimingConvention { kPredictCurrent, kPredictNext };

double mispred_rate_general(const MarkovBranchProcess& proc, const PredictorAutomaton& pred,
                            TimingConvention convention = TimingConvention::kPredictCurrent);

// Closed form for the two-bit counter:
//   m(a,b) = a b (a+b-2)^2 / [(a+b) (a^2 b + a b^2 - 3 a b + 1)].
double mispred_rate_closed_form(double alpha, double beta);

// I.i.d. specialization m(p) = p(1-p) / (2p^2 - 2p + 1).
double mispred_rate_iid(double p);

// 1 + f * P * mispred_rate_general(proc, pred).
double cpi_markov(double f, double P, const MarkovBranchProcess& proc,
                  const PredictorAutomaton& pred);

// Plain-text automaton description.  Grammar (one directive per line, '#'
// comments allowed):
//   states <s>
//   initial <state>
//   predict <state> <N|T>
//   update <state> <N|T> <next-state>
// `states` must come first; predict and update must be total.
PredictorAutomaton load_automaton(const std::string& path);
PredictorAutomaton parse_automaton(const std::string& text);
void save_automaton(const PredictorAutomaton& pred, const std::string& path);

}  // namespace glassbox::markov
