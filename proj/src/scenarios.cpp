#include "seqnpa/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>

namespace seqnpa::scenarios {

using Eigen::Matrix2cd;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

double snap_to_domain(double tau, double lo, double hi, const char* what) {
  if (!std::isfinite(tau) || tau < lo - 1e-12 || tau > hi + kDomainSlack)
    throw ScenarioError(std::string(what) + ": parameter " + std::to_string(tau) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
  return std::clamp(tau, lo, hi);
}

double min_entropy(double guess) {
  if (!(guess > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::max(0.0, -std::log2(std::min(1.0, guess)));
}

std::vector<std::vector<int>> empty_lists(const MomentModel& m) {
  return std::vector<std::vector<int>>(m.set().shape.parties());
}

LinearExpr bob_prob(const MomentModel& m, std::vector<int> outcomes, std::vector<int> inputs, int z) {
  auto out = empty_lists(m), in = empty_lists(m);
  out[0] = std::move(outcomes);
  in[0] = std::move(inputs);
  return prob_expr(m, out, in, z);
}

// Solves many objectives over one constraint system.
class Maximizer {
 public:
  Maximizer(const MomentModel& model, const Options& opt)
      : model_(model), problem_(to_sdp(model, LinearExpr{}, sdp::Sense::kMax)),
        prep_(problem_, {opt.tolerance, opt.max_iterations, opt.verbose}), opt_(opt) {}

  // Returns the optimum (NaN when not solved) and records status and iterations.
  double maximize(const LinearExpr& e, CurvePoint& pt) {
    const auto entries = objective_entries(model_, e);
    const sdp::SdpSolution sol = prep_.solve(entries, sdp::Sense::kMax);
    pt.statuses.push_back(sol.status);
    pt.iterations += sol.iterations;
    if (opt_.on_solve) {
      problem_.objective = entries;
      opt_.on_solve(problem_, sol);
    }
    if (sol.status == sdp::Status::kInfeasible) return std::numeric_limits<double>::quiet_NaN();
    return sol.objective + e.normalized().constant;
  }

  const sdp::SdpProblem& problem() const { return problem_; }

 private:
  const MomentModel& model_;
  sdp::SdpProblem problem_;
  sdp::PreparedProblem prep_;
  Options opt_;
};

Matrix2cd bloch_projector(const Eigen::Vector3d& d, int b) {
  Matrix2cd x, y, z;
  const std::complex<double> i(0, 1);
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  const double s = b == 0 ? 1.0 : -1.0;
  return 0.5 * (Matrix2cd::Identity() + s * (d[0] * x + d[1] * y + d[2] * z));
}

Eigen::Vector3d direction(int y) {
  const double r = 1.0 / std::sqrt(2.0);
  return y == 0 ? Eigen::Vector3d(r, 0, r) : Eigen::Vector3d(-r, 0, r);
}

Matrix2cd kraus(double eta, int y, int b) {
  return std::sqrt((1 + eta) / 2) * bloch_projector(direction(y), b) +
         std::sqrt((1 - eta) / 2) * bloch_projector(direction(y), 1 - b);
}

// |0>, |+>, |->, -|1>: Gram matrix equal to GramSpec::qrac().
Eigen::Vector2cd state(int z) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (z) {
    case 0: return {1, 0};
    case 1: return {r, r};
    case 2: return {r, -r};
    default: return {0, -1};
  }
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ScenarioError("sharpness eta must lie in [0, 1]");
}

MomentModel eve_model(int eve_outcomes) {
  const NetworkShape shape = NetworkShape::qrac().with_party({1}, {eve_outcomes});
  return build_model(level_set(shape, 1), GramSpec::qrac());
}

LinearExpr eve_global(const MomentModel& m, const EveTargets& t) {
  LinearExpr e;
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2) e += prob_expr(m, {{b1, b2}, {2 * b1 + b2}}, {{t.y1, t.y2}, {0}}, t.z);
  return e.normalized();
}

LinearExpr eve_local(const MomentModel& m, const EveTargets& t, int receiver) {
  LinearExpr e;
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2) {
      const int guess = receiver == 0 ? b1 : b2;
      e += prob_expr(m, {{b1, b2}, {guess}}, {{t.y1, t.y2}, {0}}, t.z);
    }
  return e.normalized();
}

void check_targets(const EveTargets& t) {
  if (t.y1 < 0 || t.y1 > 1 || t.y2 < 0 || t.y2 > 1 || t.z < 0 || t.z > 3) throw ScenarioError("Eve targets out of range");
}

// Adds every entry of dist as an equality on Bob's marginal.
void anchor(MomentModel& m, const SeqDistribution& dist) {
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int y2 = 0; y2 < 2; ++y2)
        for (int b1 = 0; b1 < 2; ++b1)
          for (int b2 = 0; b2 < 2; ++b2)
            m.add_constraint(bob_prob(m, {b1, b2}, {y1, y2}, z), Relation::kEq, dist(b1, b2, y1, y2, z));
}

CurvePoint eve_point(double parameter, const std::function<void(MomentModel&)>& constrain, const Options& opt,
                     const EveTargets& targets) {
  CurvePoint pt;
  pt.parameter = parameter;
  MomentModel global = eve_model(4);
  constrain(global);
  Maximizer g(global, opt);
  pt.values["Hglobal"] = min_entropy(g.maximize(eve_global(global, targets), pt));

  MomentModel local = eve_model(2);
  constrain(local);
  Maximizer l(local, opt);
  pt.values["Hlocal_b1"] = min_entropy(l.maximize(eve_local(local, targets, 0), pt));
  pt.values["Hlocal_b2"] = min_entropy(l.maximize(eve_local(local, targets, 1), pt));
  return pt;
}

}  // namespace

double qrac_optimum() { return (2.0 + std::sqrt(2.0)) / 4.0; }

double dv_tau_max() { return 0.5 * (1.0 + std::sqrt(std::sqrt(2.0) - 1.0)); }

double tradeoff_closed_form(double tau) {
  if (!std::isfinite(tau)) throw ScenarioError("tau must be finite");
  double rad = 16 * tau - 16 * tau * tau - 2;
  if (rad < -1e-12 || tau < 0.5 - 1e-12)
    throw ScenarioError("tau " + std::to_string(tau) + " outside the trade-off domain [0.5, (2+sqrt2)/4]");
  rad = std::max(rad, 0.0);
  return (4.0 + std::sqrt(2.0) + std::sqrt(rad)) / 8.0;
}

std::vector<double> linspace(double start, double stop, int count) {
  if (count < 1) throw ScenarioError("grid count must be >= 1");
  if (count == 1) return {start};
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = start + (stop - start) * i / (count - 1);
  g.back() = stop;
  return g;
}

OperatorSet qrac_set(SetChoice choice) {
  const NetworkShape shape = NetworkShape::qrac();
  if (choice == SetChoice::kS1) return level_set(shape, 1);
  // (y1 y2, b1 b2)
  const int words[][4] = {{0, 0, 0, 0}, {0, 0, 1, 0}, {0, 1, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0},
                          {1, 0, 0, 0}, {1, 0, 1, 0}, {1, 1, 0, 0}, {1, 1, 0, 1}, {1, 1, 1, 0}};
  std::vector<CanonicalWord> ws;
  for (auto& w : words)
    ws.push_back(CanonicalWord::of(1, make_site_operator(shape, 0, {w[0], w[1]}, {w[2], w[3]})));
  return custom_set(shape, ws);
}

LinearExpr bob1_success(const MomentModel& m) {
  LinearExpr e;
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1) e += bob_prob(m, {bit(z, y1)}, {y1, 0}, z);
  e *= 1.0 / 8.0;
  return e.normalized();
}

LinearExpr bob2_success(const MomentModel& m) {
  LinearExpr e;
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int y2 = 0; y2 < 2; ++y2)
        for (int b1 = 0; b1 < 2; ++b1) e += bob_prob(m, {b1, bit(z, y2)}, {y1, y2}, z);
  e *= 1.0 / 16.0;
  return e.normalized();
}

void SeqDistribution::validate(double tol) const {
  for (double v : p_)
    if (!std::isfinite(v) || v < -tol) throw ScenarioError("distribution has a negative or non-finite entry");
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1) {
      for (int y2 = 0; y2 < 2; ++y2) {
        double s = 0.0;
        for (int b1 = 0; b1 < 2; ++b1)
          for (int b2 = 0; b2 < 2; ++b2) s += (*this)(b1, b2, y1, y2, z);
        if (std::abs(s - 1.0) > tol) throw ScenarioError("distribution is not normalized");
      }
      for (int b1 = 0; b1 < 2; ++b1) {
        const double m0 = (*this)(b1, 0, y1, 0, z) + (*this)(b1, 1, y1, 0, z);
        const double m1 = (*this)(b1, 0, y1, 1, z) + (*this)(b1, 1, y1, 1, z);
        if (std::abs(m0 - m1) > tol) throw ScenarioError("Bob_1 marginal depends on y2");
      }
    }
}

double SeqDistribution::bob1_success() const {
  double s = 0.0;
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int b2 = 0; b2 < 2; ++b2) s += (*this)(bit(z, y1), b2, y1, 0, z);
  return s / 8.0;
}

double SeqDistribution::bob2_success() const {
  double s = 0.0;
  for (int z = 0; z < 4; ++z)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int y2 = 0; y2 < 2; ++y2)
        for (int b1 = 0; b1 < 2; ++b1) s += (*this)(b1, bit(z, y2), y1, y2, z);
  return s / 16.0;
}

SeqDistribution SeqDistribution::uniform() {
  SeqDistribution d;
  d.p_.fill(0.25);
  return d;
}

SeqDistribution simulate_pobs(double eta) {
  check_eta(eta);
  SeqDistribution d;
  for (int z = 0; z < 4; ++z) {
    const Eigen::Vector2cd psi = state(z);
    const Matrix2cd rho = psi * psi.adjoint();
    for (int y1 = 0; y1 < 2; ++y1)
      for (int b1 = 0; b1 < 2; ++b1) {
        const Matrix2cd k = kraus(eta, y1, b1);
        const Matrix2cd post = k * rho * k.adjoint();
        for (int y2 = 0; y2 < 2; ++y2)
          for (int b2 = 0; b2 < 2; ++b2) d(b1, b2, y1, y2, z) = (bloch_projector(direction(y2), b2) * post).trace().real();
      }
  }
  return d;
}

Realization simulator_realization(double eta) {
  check_eta(eta);
  // Qubit (x) outcome register, basis index 2 s + r. U_y maps |s>|0> to
  // sum_b K_b|s>|b> and is completed to a unitary.
  std::array<MatrixXcd, 2> u;
  for (int y = 0; y < 2; ++y) {
    MatrixXcd w = MatrixXcd::Zero(4, 2);
    for (int s = 0; s < 2; ++s)
      for (int b = 0; b < 2; ++b) {
        const Eigen::Vector2cd v = kraus(eta, y, b).col(s);
        for (int t = 0; t < 2; ++t) w(2 * t + b, s) = v[t];
      }
    Eigen::HouseholderQR<MatrixXcd> qr(w);
    const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(4, 4);
    MatrixXcd full(4, 4);
    for (int s = 0; s < 2; ++s) {
      full.col(2 * s) = w.col(s);
      full.col(2 * s + 1) = q.col(2 + s);
    }
    u[y] = full;
  }
  Realization r;
  for (int z = 0; z < 4; ++z) {
    VectorXcd v = VectorXcd::Zero(4);
    v[0] = state(z)[0];
    v[2] = state(z)[1];
    r.states.push_back(v);
  }
  r.op = [u](const SiteOperator& op) {
    const int y1 = op.inputs[0], y2 = op.inputs[1], b1 = op.outcomes[0], b2 = op.outcomes[1];
    MatrixXcd reg = MatrixXcd::Zero(2, 2);
    reg(b1, b1) = 1.0;
    const Matrix2cd proj = bloch_projector(direction(y2), b2);
    MatrixXcd e(4, 4);
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t) e.block(2 * s, 2 * t, 2, 2) = proj(s, t) * reg;
    return MatrixXcd(u[y1].adjoint() * e * u[y1]);
  };
  return r;
}

bool CurvePoint::ok() const {
  for (auto s : statuses)
    if (s != sdp::Status::kOptimal) return false;
  return true;
}

bool ScenarioCurve::ok() const {
  for (auto& p : points)
    if (!p.ok()) return false;
  return true;
}

TradeoffProblem qrac_tradeoff_problem(double tau, SetChoice set) {
  MomentModel m = build_model(qrac_set(set), GramSpec::qrac());
  m.add_constraint(bob1_success(m), Relation::kEq, tau);
  LinearExpr obj = bob2_success(m);
  return {std::move(m), std::move(obj)};
}

ScenarioCurve qrac_tradeoff(const std::vector<double>& taus, SetChoice set, const Options& opt) {
  ScenarioCurve curve;
  for (double t : taus) {
    const double tau = snap_to_domain(t, 0.5, qrac_optimum(), "tradeoff");
    TradeoffProblem tp = qrac_tradeoff_problem(tau, set);
    Maximizer mx(tp.model, opt);
    CurvePoint pt;
    pt.parameter = t;
    pt.values["p2_sdp"] = mx.maximize(tp.objective, pt);
    pt.values["p2_closed_form"] = tradeoff_closed_form(tau);
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

ScenarioCurve dv_min_entropies(const std::vector<double>& taus, const Options& opt) {
  ScenarioCurve curve;
  for (double t : taus) {
    const double tau = snap_to_domain(t, 0.75, dv_tau_max(), "dv-randomness");
    MomentModel m = build_model(qrac_set(SetChoice::kS1), GramSpec::qrac());
    m.add_constraint(bob1_success(m), Relation::kEq, tau);
    m.add_constraint(bob2_success(m), Relation::kGe, 0.75);
    Maximizer mx(m, opt);
    CurvePoint pt;
    pt.parameter = t;
    double g1 = 0.0, g2 = 0.0, g12 = 0.0;
    auto best = [&](double& g, double v) { g = std::isnan(v) || std::isnan(g) ? std::nan("") : std::max(g, v); };
    for (int z = 0; z < 4; ++z) {
      for (int y1 = 0; y1 < 2; ++y1)
        for (int b1 = 0; b1 < 2; ++b1) best(g1, mx.maximize(bob_prob(m, {b1}, {y1, 0}, z), pt));
      for (int y2 = 0; y2 < 2; ++y2)
        for (int b2 = 0; b2 < 2; ++b2)
          best(g2, mx.maximize(bob_prob(m, {0, b2}, {0, y2}, z) + bob_prob(m, {1, b2}, {0, y2}, z), pt));
      for (int y1 = 0; y1 < 2; ++y1)
        for (int y2 = 0; y2 < 2; ++y2)
          for (int b1 = 0; b1 < 2; ++b1)
            for (int b2 = 0; b2 < 2; ++b2) best(g12, mx.maximize(bob_prob(m, {b1, b2}, {y1, y2}, z), pt));
    }
    pt.values["Hb1"] = min_entropy(g1);
    pt.values["Hb2"] = min_entropy(g2);
    pt.values["Hb1b2"] = min_entropy(g12);
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

ScenarioCurve eve_tradeoff_entropies(const std::vector<double>& taus, const Options& opt, const EveTargets& targets) {
  check_targets(targets);
  ScenarioCurve curve;
  for (double t : taus) {
    const double tau = snap_to_domain(t, 0.5, qrac_optimum(), "eve-tradeoff");
    const double p2 = tradeoff_closed_form(tau);
    curve.points.push_back(eve_point(
        t,
        [&](MomentModel& m) {
          m.add_constraint(bob1_success(m), Relation::kEq, tau);
          m.add_constraint(bob2_success(m), Relation::kEq, p2);
        },
        opt, targets));
  }
  return curve;
}

ScenarioCurve eve_full_entropies(const std::vector<double>& etas, const Options& opt, const EveTargets& targets) {
  check_targets(targets);
  ScenarioCurve curve;
  for (double eta : etas) {
    const SeqDistribution d = simulate_pobs(eta);
    CurvePoint pt = eve_point(eta, [&](MomentModel& m) { anchor(m, d); }, opt, targets);
    pt.values["tau_of_eta"] = d.bob1_success();
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

std::string to_string(Verdict v) { return v == Verdict::kFeasible ? "feasible" : "infeasible-at-level"; }

MembershipResult membership_test(const SeqDistribution& dist, const GramSpec& gram, int level, const Options& opt) {
  dist.validate(1e-6);
  MomentModel m = build_model(level_set(NetworkShape::qrac(), level), gram);
  anchor(m, dist);
  const sdp::SdpProblem p = to_sdp(m, LinearExpr{}, sdp::Sense::kMax);
  const sdp::PreparedProblem prep(p, {opt.tolerance, opt.max_iterations, opt.verbose});
  MembershipResult r;
  if (prep.feasibility() == sdp::Status::kInfeasible) {
    r.verdict = Verdict::kInfeasibleAtLevel;
    r.status = sdp::Status::kInfeasible;
    return r;
  }
  const sdp::SdpSolution sol = prep.solve();
  if (opt.on_solve) opt.on_solve(p, sol);
  r.status = sol.status;
  r.verdict = sol.status == sdp::Status::kInfeasible ? Verdict::kInfeasibleAtLevel : Verdict::kFeasible;
  return r;
}

}  // namespace seqnpa::scenarios
