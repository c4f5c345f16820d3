#include "sdp_ipm.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <limits>

namespace seqnpa::sdp::detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kStepDamping = 0.95;
constexpr double kShortStep = 0.1;
constexpr double kProgress = 0.5;
constexpr int kStallIterations = 25;
constexpr double kDivergence = 1e8;

using Blocks = std::vector<MatrixXd>;

Eigen::Map<const VectorXd> vec(const MatrixXd& m) { return {m.data(), m.size()}; }

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(dot(a, a)); }

// Largest alpha in (0, 1] with x + alpha dx positive definite; 0 if x is not.
double max_step(const MatrixXd& x, const MatrixXd& dx, bool& ok) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) {
    ok = false;
    return 0.0;
  }
  const MatrixXd l = llt.matrixL();
  MatrixXd t = llt.matrixL().solve(dx);
  t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
  const double ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff();
  return ev >= 0.0 ? 1.0 : std::min(1.0, -1.0 / ev);
}

// W = Y^1/2 (Y^1/2 S Y^1/2)^-1/2 Y^1/2.
MatrixXd nt_scaling(const MatrixXd& s, const MatrixXd& y) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> ey(y);
  const VectorXd ly = ey.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const MatrixXd yh = ey.eigenvectors() * ly.asDiagonal() * ey.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> ea(yh * s * yh);
  const VectorXd la = ea.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const MatrixXd ah = ea.eigenvectors() * la.asDiagonal() * ea.eigenvectors().transpose();
  const MatrixXd w = yh * ah * yh;
  return 0.5 * (w + w.transpose());
}

}  // namespace

MatrixXd ParametricSdp::slack(int b, const VectorXd& s) const {
  MatrixXd m = h0[b];
  if (params > 0) {
    VectorXd v = h[b] * s;
    m += Eigen::Map<MatrixXd>(v.data(), m.rows(), m.cols());
  }
  return 0.5 * (m + m.transpose());
}

IpmResult interior_point(const ParametricSdp& p, const VectorXd& c, double tol, int max_iterations,
                         bool verbose, Scaling scaling) {
  const int d = p.params;
  const int nb = p.blocks();
  IpmResult res;
  int n_total = 0;
  for (const auto& b : p.h0) n_total += static_cast<int>(b.rows());

  if (d == 0) {
    res.s = VectorXd();
    res.status = Status::kOptimal;
    for (int b = 0; b < nb; ++b) {
      res.y.push_back(MatrixXd::Zero(p.h0[b].rows(), p.h0[b].cols()));
      if (p.h0[b].rows() > 0 &&
          Eigen::SelfAdjointEigenSolver<MatrixXd>(p.h0[b], Eigen::EigenvaluesOnly).eigenvalues().minCoeff() < -tol)
        res.status = Status::kInfeasible;
    }
    return res;
  }

  double h0_norm = 0.0;
  for (const auto& b : p.h0) h0_norm += b.squaredNorm();
  h0_norm = std::sqrt(h0_norm);
  const double c_norm = c.norm();

  MatrixXd gram = MatrixXd::Zero(d, d);
  for (int b = 0; b < nb; ++b) gram.noalias() += p.h[b].transpose() * p.h[b];
  Eigen::LDLT<MatrixXd> gram_f(gram);

  auto apply = [&](const VectorXd& s, int b) {
    VectorXd v = p.h[b] * s;
    return MatrixXd(Eigen::Map<MatrixXd>(v.data(), p.h0[b].rows(), p.h0[b].cols()));
  };
  auto adjoint = [&](const Blocks& y) {
    VectorXd out = VectorXd::Zero(d);
    for (int b = 0; b < nb; ++b) out.noalias() += p.h[b].transpose() * vec(y[b]);
    return out;
  };

  VectorXd s = VectorXd::Zero(d);
  Blocks S(nb), Y(nb);
  for (int b = 0; b < nb; ++b) {
    const auto n = p.h0[b].rows();
    S[b] = 10.0 * MatrixXd::Identity(n, n);
    Y[b] = 10.0 * MatrixXd::Identity(n, n);
  }

  double best_err = std::numeric_limits<double>::infinity();
  int it = 0;
  int last_progress = 0;
  bool diverged = false;
  for (;; ++it) {
    Blocks P(nb);
    for (int b = 0; b < nb; ++b) P[b] = p.h0[b] + apply(s, b) - S[b];
    const VectorXd D = adjoint(Y) + c;
    const double mu = n_total > 0 ? dot(S, Y) / n_total : 0.0;
    const double pobj = c.dot(s);
    const double dobj = dot(p.h0, Y);
    Residuals r;
    r.primal = norm(P) / (1.0 + h0_norm);
    r.dual = D.norm() / (1.0 + c_norm);
    // Complementarity guards against the objectives crossing while still infeasible.
    r.gap = std::max(std::abs(pobj - dobj), dot(S, Y)) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (!std::isfinite(pobj) || !std::isfinite(dobj)) break;
    if (verbose)
      std::fprintf(stderr, "ipm %3d  p %.10g  d %.10g  pinf %.2e dinf %.2e gap %.2e\n", it, pobj, dobj,
                   r.primal, r.dual, r.gap);
    const double err = std::max({r.primal, r.dual, r.gap});
    if (err < kProgress * best_err) last_progress = it;
    if (err < best_err) {
      best_err = err;
      res.s = s;
      res.y = Y;
      res.primal_objective = pobj;
      res.dual_objective = dobj;
      res.residuals = r;
      res.iterations = it;
    }
    if (err < tol) {
      res.status = Status::kOptimal;
      return res;
    }
    if (std::abs(pobj) > kDivergence * (1.0 + c_norm) && r.primal < 1e-6) {
      res.status = Status::kUnbounded;
      diverged = true;
      break;
    }
    if (it >= max_iterations) break;
    if (it - last_progress > kStallIterations) {
      if (verbose) std::fprintf(stderr, "ipm: no progress in %d iterations\n", kStallIterations);
      break;
    }

    // NT: W S W = Y and the Newton map is dS -> W dS W. HKM uses dS -> S^-1 dS Y.
    const bool nt = scaling == Scaling::kNT;
    Blocks Si(nb), W(nb);
    MatrixXd M = MatrixXd::Zero(d, d);
    for (int b = 0; b < nb; ++b) {
      const auto n = p.h0[b].rows();
      if (n == 0) continue;
      Si[b] = S[b].llt().solve(MatrixXd::Identity(n, n));
      if (nt) W[b] = nt_scaling(S[b], Y[b]);
      MatrixXd T(n * n, d);
      for (int f = 0; f < d; ++f) {
        Eigen::Map<const MatrixXd> hf(p.h[b].col(f).data(), n, n);
        Eigen::Map<MatrixXd>(T.col(f).data(), n, n).noalias() = nt ? W[b] * hf * W[b] : Si[b] * hf * Y[b];
      }
      M.noalias() += p.h[b].transpose() * T;
    }
    M = 0.5 * (M + M.transpose());
    Eigen::LLT<MatrixXd> chol;
    const double diag_max = M.diagonal().cwiseAbs().maxCoeff();
    double reg = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      chol.compute(M + reg * diag_max * MatrixXd::Identity(d, d));
      if (chol.info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 : reg * 10.0;
    }
    if (chol.info() != Eigen::Success) {
      if (verbose) std::fprintf(stderr, "ipm: normal equations not positive definite\n");
      break;
    }

    auto direction = [&](double sigmu, const Blocks* corr, VectorXd& ds, Blocks& dS, Blocks& dY) {
      Blocks Rm(nb);
      for (int b = 0; b < nb; ++b) {
        if (p.h0[b].rows() == 0) {
          Rm[b] = p.h0[b];
          continue;
        }
        Rm[b] = sigmu * Si[b] - Y[b] - (nt ? W[b] * P[b] * W[b] : Si[b] * P[b] * Y[b]);
        if (corr) Rm[b] -= (*corr)[b];
      }
      ds = chol.solve(D + adjoint(Rm));
      dS.resize(nb);
      dY.resize(nb);
      for (int b = 0; b < nb; ++b) {
        dS[b] = P[b] + apply(ds, b);
        if (p.h0[b].rows() == 0) {
          dY[b] = p.h0[b];
          continue;
        }
        MatrixXd t = sigmu * Si[b] - Y[b] - (nt ? W[b] * dS[b] * W[b] : Si[b] * dS[b] * Y[b]);
        if (corr) t -= (*corr)[b];
        dY[b] = 0.5 * (t + t.transpose());
      }
      // Keep the dual residual exact along the step.
      const VectorXd e = gram_f.solve(adjoint(dY) + D);
      for (int b = 0; b < nb; ++b) dY[b] -= apply(e, b);
    };
    auto steps = [&](const Blocks& dS, const Blocks& dY, double& ap, double& ad) {
      bool ok = true;
      ap = 1.0;
      ad = 1.0;
      for (int b = 0; b < nb; ++b) {
        if (p.h0[b].rows() == 0) continue;
        ap = std::min(ap, max_step(S[b], dS[b], ok));
        ad = std::min(ad, max_step(Y[b], dY[b], ok));
      }
      return ok;
    };

    VectorXd ds;
    Blocks dS, dY;
    direction(0.0, nullptr, ds, dS, dY);
    double ap, ad;
    if (!steps(dS, dY, ap, ad)) {
      if (verbose) std::fprintf(stderr, "ipm: iterate left the cone\n");
      break;
    }
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      if (p.h0[b].rows() > 0) mu_aff += ((S[b] + ap * dS[b]).array() * (Y[b] + ad * dY[b]).array()).sum();
    mu_aff /= std::max(n_total, 1);
    const double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
    Blocks corr(nb);
    for (int b = 0; b < nb; ++b) corr[b] = p.h0[b].rows() ? MatrixXd(Si[b] * dS[b] * dY[b]) : p.h0[b];
    direction(sigma * mu, &corr, ds, dS, dY);
    if (!steps(dS, dY, ap, ad)) {
      if (verbose) std::fprintf(stderr, "ipm: iterate left the cone\n");
      break;
    }
    // Short steps signal lost centrality: try re-centering directions instead.
    for (double sc : {0.5, 0.9}) {
      if (std::min(ap, ad) >= kShortStep) break;
      VectorXd ds2;
      Blocks dS2, dY2;
      double ap2, ad2;
      direction(std::max(sigma, sc) * mu, nullptr, ds2, dS2, dY2);
      if (!steps(dS2, dY2, ap2, ad2) || std::min(ap2, ad2) <= std::min(ap, ad)) continue;
      ds = std::move(ds2);
      dS = std::move(dS2);
      dY = std::move(dY2);
      ap = ap2;
      ad = ad2;
    }
    ap = std::min(1.0, kStepDamping * ap);
    ad = std::min(1.0, kStepDamping * ad);
    s += ap * ds;
    for (int b = 0; b < nb; ++b) {
      S[b] += ap * dS[b];
      Y[b] += ad * dY[b];
      S[b] = 0.5 * (S[b] + S[b].transpose());
      Y[b] = 0.5 * (Y[b] + Y[b].transpose());
    }
  }
  if (!diverged) res.status = it >= max_iterations ? Status::kMaxIterations : Status::kNumericalFailure;
  if (res.s.size() != d) {
    res.s = s;
    res.y = Y;
  }
  return res;
}

}  // namespace seqnpa::sdp::detail
