#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "seqnpa/momentbuilder.hpp"
#include "seqnpa/sdpcore.hpp"

namespace seqnpa::scenarios {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// (2 + sqrt 2) / 4, the single-receiver qubit QRAC optimum.
double qrac_optimum();

// Right end of the dv-randomness domain, where the trade-off meets P(b2) = 0.75:
// (1 + sqrt(sqrt2 - 1)) / 2.
double dv_tau_max();

// Grid values may overshoot an irrational domain end by this much; they are
// clamped onto it.
inline constexpr double kDomainSlack = 5e-5;

// Bob_2's optimal success given Bob_1's success tau.
double tradeoff_closed_form(double tau);

// Evenly spaced, both ends included.
std::vector<double> linspace(double start, double stop, int count);

enum class SetChoice { kS1, kS1Prime };

// The two-receiver QRAC operator set: all 17 operators, or the 11-word reduced set.
OperatorSet qrac_set(SetChoice choice);

// Bit y of state label z = 2 z_0 + z_1.
inline int bit(int z, int y) { return y == 0 ? z >> 1 : z & 1; }

// Average success of Bob_1 (bit z_{y1}) and Bob_2 (bit z_{y2}) over uniform y, z.
// Bob_1 is read at y2 = 0.
LinearExpr bob1_success(const MomentModel& model);
LinearExpr bob2_success(const MomentModel& model);

// p(b1 b2 | y1 y2, z) of the two-receiver chain.
class SeqDistribution {
 public:
  SeqDistribution() { p_.fill(0.0); }

  double& operator()(int b1, int b2, int y1, int y2, int z) { return p_[index(b1, b2, y1, y2, z)]; }
  double operator()(int b1, int b2, int y1, int y2, int z) const { return p_[index(b1, b2, y1, y2, z)]; }

  // Nonnegative, normalized, Bob_1 marginal independent of y2. Throws ScenarioError.
  void validate(double tol = 1e-9) const;
  double bob1_success() const;
  double bob2_success() const;

  static SeqDistribution uniform();

 private:
  static int index(int b1, int b2, int y1, int y2, int z) { return (((b1 * 2 + b2) * 2 + y1) * 2 + y2) * 4 + z; }
  std::array<double, 64> p_;
};

// Bob_1 performs the unsharp Luders instrument of sharpness eta along d(y1),
// Bob_2 a projective measurement along d(y2), on the BB84 states |0>,|+>,|->,|1>;
// d(0) = (1,0,1)/sqrt2, d(1) = (-1,0,1)/sqrt2.
SeqDistribution simulate_pobs(double eta);

// The same experiment as projective sequential operators on qubit (x) register,
// with states matching GramSpec::qrac() exactly.
Realization simulator_realization(double eta);

struct Options {
  double tolerance = 1e-8;
  int max_iterations = 200;
  bool verbose = false;
  // Called after every SDP solve with the problem carrying that objective.
  std::function<void(const sdp::SdpProblem&, const sdp::SdpSolution&)> on_solve;
};

struct CurvePoint {
  double parameter = 0.0;
  std::map<std::string, double> values;
  std::vector<sdp::Status> statuses;
  int iterations = 0;

  bool ok() const;
};

struct ScenarioCurve {
  std::vector<CurvePoint> points;
  bool ok() const;
};

// Values: p2_sdp, p2_closed_form.
ScenarioCurve qrac_tradeoff(const std::vector<double>& taus, SetChoice set, const Options& opt = {});

// Values: Hb1, Hb2, Hb1b2 (bits), under P(b1) = tau and P(b2) >= 0.75.
ScenarioCurve dv_min_entropies(const std::vector<double>& taus, const Options& opt = {});

// Eve's guessing targets: Bob inputs (y1, y2) and state index z.
struct EveTargets {
  int y1 = 0;
  int y2 = 0;
  int z = 0;
};

// Values: Hglobal, Hlocal_b1, Hlocal_b2 under P(b1) = tau and P(b2) on the trade-off.
ScenarioCurve eve_tradeoff_entropies(const std::vector<double>& taus, const Options& opt = {},
                                     const EveTargets& targets = {});

// Values: tau_of_eta, Hglobal, Hlocal_b1, Hlocal_b2 with every entry of
// simulate_pobs(eta) anchored.
ScenarioCurve eve_full_entropies(const std::vector<double>& etas, const Options& opt = {},
                                 const EveTargets& targets = {});

enum class Verdict { kFeasible, kInfeasibleAtLevel };
std::string to_string(Verdict v);

struct MembershipResult {
  Verdict verdict = Verdict::kFeasible;
  sdp::Status status = sdp::Status::kOptimal;
};

MembershipResult membership_test(const SeqDistribution& dist, const GramSpec& gram, int level, const Options& opt = {});

// Level-1 QRAC model with P(b1) = tau anchored; the objective is P(b2).
struct TradeoffProblem {
  MomentModel model;
  LinearExpr objective;
};
TradeoffProblem qrac_tradeoff_problem(double tau, SetChoice set);

}  // namespace seqnpa::scenarios
