#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <complex>
#include <random>

#include "seqnpa/momentbuilder.hpp"
#include "seqnpa/scenarios.hpp"

namespace seqnpa::test_support {

inline Eigen::MatrixXcd random_unitary(int d, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = {g(rng), g(rng)};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
}

// Random projective two-receiver QRAC model on qubit (x) aux (x) register,
// basis index (2 aux + a) * 2 + r with aux dimension `aux`. Bob_1 applies a
// random unitary per y1 and reads the register; Bob_2 projects system (x) aux
// onto a random subspace per y2. The states are the QRAC states times a random
// aux vector, so their Gram matrix is GramSpec::qrac().
inline Realization random_qrac_realization(std::mt19937& rng, int aux = 2) {
  const int sa = 2 * aux, d = 2 * sa;
  const Realization honest = scenarios::simulator_realization(1.0);
  std::normal_distribution<double> g;
  Eigen::VectorXcd psi(aux);
  for (int a = 0; a < aux; ++a) psi[a] = {g(rng), g(rng)};
  psi.normalize();

  Realization r;
  for (int z = 0; z < 4; ++z) {
    const std::complex<double> amp[2] = {honest.states[z][0], honest.states[z][2]};
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < aux; ++a) v[(s * aux + a) * 2] = amp[s] * psi[a];
    r.states.push_back(v);
  }
  std::array<Eigen::MatrixXcd, 2> u = {random_unitary(d, rng), random_unitary(d, rng)};
  std::array<Eigen::MatrixXcd, 2> q;
  std::uniform_int_distribution<int> rank(1, sa - 1);
  for (int y = 0; y < 2; ++y) {
    const Eigen::MatrixXcd basis = random_unitary(sa, rng);
    const int k = rank(rng);
    q[y] = basis.leftCols(k) * basis.leftCols(k).adjoint();
  }
  r.op = [u, q, sa, d](const SiteOperator& op) {
    const int y1 = op.inputs[0], y2 = op.inputs[1], b1 = op.outcomes[0], b2 = op.outcomes[1];
    const Eigen::MatrixXcd proj = b2 == 0 ? q[y2] : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(sa, sa) - q[y2]);
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < sa; ++i)
      for (int j = 0; j < sa; ++j) e(2 * i + b1, 2 * j + b1) = proj(i, j);
    return Eigen::MatrixXcd(u[y1].adjoint() * e * u[y1]);
  };
  return r;
}

// Homogeneous vector (coefficients..., constant) of a linear expression.
inline Eigen::VectorXd as_vector(const MomentModel& m, const LinearExpr& e) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.num_variables() + 1);
  for (auto [var, c] : e.terms) v[var] += c;
  v[m.num_variables()] += e.constant;
  return v;
}

inline LinearExpr entry_expr(const MomentModel& m, int z, int zp, int i, int j) {
  const EntryRef& e = m.entry(m.position(z, i), m.position(zp, j));
  LinearExpr x;
  if (e.is_variable())
    x.add(e.var, 1.0);
  else
    x.constant = e.value;
  return x;
}

// Distance of target expressions from the span of the model's relations.
class RelationSpan {
 public:
  explicit RelationSpan(const MomentModel& m) : model_(m) {
    Eigen::MatrixXd r(m.num_variables() + 1, static_cast<int>(m.relations().size()));
    for (std::size_t k = 0; k < m.relations().size(); ++k) r.col(static_cast<int>(k)) = as_vector(m, m.relations()[k]);
    qr_.setThreshold(1e-10);
    qr_.compute(r);
  }
  double residual(const LinearExpr& target) const {
    const Eigen::VectorXd t = as_vector(model_, target);
    const Eigen::VectorXd c = qr_.householderQ().adjoint() * t;
    return c.tail(c.size() - qr_.rank()).norm();
  }

 private:
  const MomentModel& model_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

// Largest distance from the relation span over the QRAC equality families: block
// sums against the identity entry and lambda, diagonal against the first row, and
// equal row sums across input pairs. `checked` receives the number of identities.
inline double equality_family_residual(const MomentModel& m, int* checked = nullptr) {
  const RelationSpan span(m);
  const Eigen::MatrixXd& lambda = m.gram().lambda;
  double worst = 0.0;
  int count = 0;
  for (int z = 0; z < 4; ++z)
    for (int zp = 0; zp < 4; ++zp) {
      const auto g = [&](int i, int j) { return entry_expr(m, z, zp, i, j); };
      for (int i = 1; i <= 4; ++i) {
        LinearExpr sum = g(4 * i - 3, 4 * i - 3) + g(4 * i - 2, 4 * i - 2) + g(4 * i - 1, 4 * i - 1) + g(4 * i, 4 * i);
        LinearExpr l;
        l.constant = lambda(z, zp);
        worst = std::max(worst, span.residual(sum - g(0, 0)));
        worst = std::max(worst, span.residual(sum - l));
        count += 2;
      }
      for (int i = 1; i <= 16; ++i) {
        worst = std::max(worst, span.residual(g(i, i) - g(0, i)));
        ++count;
        for (int k : {5, 9, 13}) {
          const LinearExpr lhs = g(i, 1) + g(i, 2) + g(i, 3) + g(i, 4);
          const LinearExpr rhs = g(i, k) + g(i, k + 1) + g(i, k + 2) + g(i, k + 3);
          worst = std::max(worst, span.residual(lhs - rhs));
          ++count;
        }
      }
    }
  if (checked) *checked = count;
  return worst;
}

}  // namespace seqnpa::test_support
