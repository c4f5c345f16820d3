#include "seqnpa/sdpcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "sdp_ipm.hpp"
#include "sdp_presolve.hpp"

namespace seqnpa::sdp {

using detail::Layout;
using detail::ParametricSdp;
using detail::Reducer;
using detail::SparseVec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kConsistencyTol = 1e-9;
constexpr double kHintTol = 1e-9;
constexpr double kPhaseOneTol = 1e-9;
constexpr double kInteriorMargin = 1e-7;
constexpr int kMaxFaceRounds = 4;
constexpr double kRankGap = 1e3;
constexpr double kFaceTol = 1e-7;

// Merge duplicates into one upper-triangular entry per position. Throws when the
// two orientations of an off-diagonal position disagree.
std::vector<Entry> canonical(const std::vector<Entry>& in, const char* what) {
  std::map<std::tuple<int, int, int>, double> upper, lower;
  for (const Entry& e : in) {
    if (e.i <= e.j)
      upper[{e.block, e.i, e.j}] += e.value;
    else
      lower[{e.block, e.j, e.i}] += e.value;
  }
  for (auto& [k, v] : lower) {
    auto it = upper.find(k);
    if (it == upper.end()) {
      upper[k] = v;
    } else if (std::abs(it->second - v) > 1e-12 * std::max(1.0, std::abs(v))) {
      throw SdpError(std::string(what) + ": non-symmetric data at block " + std::to_string(std::get<0>(k) + 1) +
                     " (" + std::to_string(std::get<1>(k) + 1) + "," + std::to_string(std::get<2>(k) + 1) + ")");
    }
  }
  std::vector<Entry> out;
  for (auto& [k, v] : upper)
    if (v != 0.0) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  return out;
}

// Orthonormal basis of the complement of span(w) in R^n.
MatrixXd complement(const MatrixXd& w, int n) {
  if (w.cols() == 0) return MatrixXd::Identity(n, n);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(w);
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  return q.rightCols(n - rank);
}

double min_eigenvalue(const MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kMaxIterations: return "max_iterations";
    case Status::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

void SdpProblem::validate() const {
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (blocks[b] == 0) throw SdpError("block " + std::to_string(b + 1) + " has size 0");
  auto check = [&](const std::vector<Entry>& es, const std::string& what) {
    for (const Entry& e : es) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
        throw SdpError(what + ": block index " + std::to_string(e.block + 1) + " out of range");
      const int n = block_dim(e.block);
      if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
        throw SdpError(what + ": index (" + std::to_string(e.i + 1) + "," + std::to_string(e.j + 1) +
                       ") out of range for block " + std::to_string(e.block + 1));
      if (is_diagonal(e.block) && e.i != e.j)
        throw SdpError(what + ": off-diagonal entry in diagonal block " + std::to_string(e.block + 1));
      if (!std::isfinite(e.value)) throw SdpError(what + ": non-finite coefficient");
    }
    canonical(es, what.c_str());
  };
  check(objective, "objective");
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    check(constraints[k].entries, "constraint " + std::to_string(k + 1));
    if (!std::isfinite(constraints[k].rhs))
      throw SdpError("constraint " + std::to_string(k + 1) + ": non-finite right-hand side");
  }
  for (const KernelHint& h : kernel_hints) {
    if (h.block < 0 || h.block >= static_cast<int>(blocks.size())) throw SdpError("kernel hint: bad block");
    for (auto& [i, v] : h.vector)
      if (i < 0 || i >= block_dim(h.block) || !std::isfinite(v)) throw SdpError("kernel hint: bad entry");
  }
}

bool equivalent(const SdpProblem& a, const SdpProblem& b) {
  if (a.blocks != b.blocks || a.sense != b.sense || a.constraints.size() != b.constraints.size()) return false;
  auto same = [](const std::vector<Entry>& x, const std::vector<Entry>& y) {
    auto cx = canonical(x, "lhs");
    auto cy = canonical(y, "rhs");
    if (cx.size() != cy.size()) return false;
    for (std::size_t k = 0; k < cx.size(); ++k)
      if (cx[k].block != cy[k].block || cx[k].i != cy[k].i || cx[k].j != cy[k].j || cx[k].value != cy[k].value)
        return false;
    return true;
  };
  if (!same(a.objective, b.objective)) return false;
  for (std::size_t k = 0; k < a.constraints.size(); ++k)
    if (a.constraints[k].rhs != b.constraints[k].rhs || !same(a.constraints[k].entries, b.constraints[k].entries))
      return false;
  return true;
}

struct PreparedProblem::Impl {
  SdpProblem problem;
  SolveOptions options;
  Layout layout;
  Reducer reducer;
  Status feasibility = Status::kOptimal;
  std::string reason;

  std::vector<int> free_cols;
  std::vector<double> x0;
  std::vector<SparseVec> directions;  // per free column

  // Current parametrization: s_free = s_base + N * s.
  VectorXd s_base;
  MatrixXd n_map;
  std::vector<MatrixXd> k;  // per cone, columns span the face
  std::vector<int> active;  // cones with a nonempty face
  ParametricSdp reduced;
  int kernel_dim = 0;
  double face_residual = 0.0;

  // Dual recovery: K^T (A^* y) K = K^T C K + Y, min-norm y.
  mutable std::optional<MatrixXd> dual_map;
  mutable std::optional<Eigen::CompleteOrthogonalDecomposition<MatrixXd>> dual_gram;

  Impl(const SdpProblem& p, const SolveOptions& o)
      : problem(p), options(o), layout(p), reducer(layout.entries) {}

  void log(const char* fmt, double a = 0, double b = 0) const {
    if (options.verbose) {
      std::fprintf(stderr, fmt, a, b);
      std::fprintf(stderr, "\n");
    }
  }

  bool presolve();
  void certified_faces();
  void build_reduced();
  void phase_one_loop();
  void numeric_face(const std::vector<MatrixXd>& y);
  std::vector<double> entries_at(const VectorXd& s) const;
  std::vector<MatrixXd> blocks_of(const std::vector<double>& x) const;
  VectorXd recover_dual(const std::vector<Entry>& c, double sign, const std::vector<MatrixXd>& y) const;
};

bool PreparedProblem::Impl::presolve() {
  double bmax = 0.0;
  for (auto& c : problem.constraints) bmax = std::max(bmax, std::abs(c.rhs));
  for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
    const auto& c = problem.constraints[k];
    const SparseVec row = layout.functional(canonical(c.entries, "constraint"));
    if (reducer.add(row, c.rhs, kConsistencyTol * (1.0 + bmax)) == Reducer::AddResult::kInconsistent) {
      reason = "constraint " + std::to_string(k + 1) + " contradicts the preceding equalities";
      return false;
    }
  }
  return true;
}

// Accepts kernel candidates h whose quadratic form h^T X h vanishes identically on
// the affine set; for those X h = 0 follows from X >= 0 and is imposed linearly.
void PreparedProblem::Impl::certified_faces() {
  struct Candidate {
    int cone;
    SparseVec v;
  };
  std::vector<Candidate> pending;
  for (const KernelHint& h : problem.kernel_hints) {
    if (problem.is_diagonal(h.block)) {
      for (auto& [i, v] : h.vector)
        if (v != 0.0) pending.push_back({layout.cone_of(h.block, i), {{0, 1.0}}});
      continue;
    }
    SparseVec v;
    for (auto& [i, a] : h.vector)
      if (a != 0.0) v.emplace_back(i, a);
    std::sort(v.begin(), v.end());
    if (!v.empty()) pending.push_back({layout.cone_of(h.block, 0), v});
  }
  for (int c = 0; c < static_cast<int>(layout.dims.size()); ++c)
    for (int i = 0; i < layout.dims[c]; ++i) pending.push_back({c, {{i, 1.0}}});

  std::vector<std::vector<VectorXd>> accepted(layout.dims.size());
  while (!pending.empty()) {
    std::vector<Candidate> now, rest;
    for (Candidate& cand : pending) {
      SparseVec g;
      double hh = 0.0;
      for (auto& [i, a] : cand.v) hh += a * a;
      for (auto& [i, a] : cand.v)
        for (auto& [j, b] : cand.v)
          if (i <= j) g.emplace_back(layout.index(cand.cone, i, j), a * b * Layout::weight(i, j));
      std::sort(g.begin(), g.end());
      double k0 = 0.0;
      const SparseVec red = reducer.reduce(g, k0);
      double worst = std::abs(k0);
      for (auto& t : red) worst = std::max(worst, std::abs(t.second));
      (worst <= kHintTol * hh ? now : rest).push_back(std::move(cand));
    }
    if (now.empty()) break;
    for (const Candidate& cand : now) {
      const int n = layout.dims[cand.cone];
      VectorXd dense = VectorXd::Zero(n);
      for (auto& [i, a] : cand.v) dense[i] = a;
      accepted[cand.cone].push_back(dense);
      for (int p = 0; p < n; ++p) {
        SparseVec row;
        for (auto& [q, a] : cand.v) row.emplace_back(layout.index(cand.cone, p, q), a);
        std::sort(row.begin(), row.end());
        if (reducer.add(row, 0.0, kConsistencyTol) == Reducer::AddResult::kInconsistent) {
          feasibility = Status::kInfeasible;
          reason = "implied kernel contradicts the equality constraints";
          return;
        }
      }
    }
    pending = std::move(rest);
  }

  k.assign(layout.dims.size(), MatrixXd());
  kernel_dim = 0;
  for (std::size_t c = 0; c < layout.dims.size(); ++c) {
    const int n = layout.dims[c];
    MatrixXd w(n, accepted[c].size());
    for (std::size_t t = 0; t < accepted[c].size(); ++t) w.col(t) = accepted[c][t];
    k[c] = complement(w, n);
    kernel_dim += n - static_cast<int>(k[c].cols());
  }
  free_cols = reducer.free_columns();
  x0 = reducer.particular();
  directions.clear();
  for (int f : free_cols) directions.push_back(reducer.direction(f));
  s_base = VectorXd::Zero(free_cols.size());
  n_map = MatrixXd::Identity(free_cols.size(), free_cols.size());
  log("presolve: %g free parameters, certified kernel %g", double(free_cols.size()), double(kernel_dim));
}

void PreparedProblem::Impl::build_reduced() {
  const int d0 = static_cast<int>(free_cols.size());
  const int d = static_cast<int>(n_map.cols());
  // Which cone each entry index belongs to, and its (i, j).
  std::vector<std::tuple<int, int, int>> where(layout.entries);
  for (std::size_t c = 0; c < layout.dims.size(); ++c)
    for (int j = 0; j < layout.dims[c]; ++j)
      for (int i = 0; i <= j; ++i) where[layout.index(static_cast<int>(c), i, j)] = {static_cast<int>(c), i, j};

  active.clear();
  for (std::size_t c = 0; c < layout.dims.size(); ++c)
    if (k[c].cols() > 0) active.push_back(static_cast<int>(c));
  std::vector<int> slot(layout.dims.size(), -1);
  for (std::size_t a = 0; a < active.size(); ++a) slot[active[a]] = static_cast<int>(a);

  auto add_entry = [&](MatrixXd& m, int c, int i, int j, double v) {
    const auto ki = k[c].row(i);
    const auto kj = k[c].row(j);
    if (i == j)
      m.noalias() += v * ki.transpose() * ki;
    else
      m.noalias() += v * (ki.transpose() * kj + kj.transpose() * ki);
  };

  // Base point.
  std::vector<double> xb = x0;
  for (int f = 0; f < d0; ++f)
    if (s_base[f] != 0.0)
      for (auto& [e, v] : directions[f]) xb[e] += s_base[f] * v;

  reduced.params = d;
  reduced.h0.assign(active.size(), MatrixXd());
  reduced.h.assign(active.size(), MatrixXd());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto r = k[active[a]].cols();
    reduced.h0[a] = MatrixXd::Zero(r, r);
    reduced.h[a] = MatrixXd::Zero(r * r, d);
  }
  for (int e = 0; e < layout.entries; ++e) {
    if (xb[e] == 0.0) continue;
    auto [c, i, j] = where[e];
    if (slot[c] >= 0) add_entry(reduced.h0[slot[c]], c, i, j, xb[e]);
  }
  // Directions: G_f = K^T F_f K, then H_j = sum_f N(f, j) G_f.
  std::vector<MatrixXd> g(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto r = k[active[a]].cols();
    g[a] = MatrixXd::Zero(r * r, d0);
  }
  for (int f = 0; f < d0; ++f) {
    for (auto& [e, v] : directions[f]) {
      auto [c, i, j] = where[e];
      if (slot[c] < 0) continue;
      const auto r = k[c].cols();
      Eigen::Map<MatrixXd> m(g[slot[c]].col(f).data(), r, r);
      MatrixXd tmp = MatrixXd::Zero(r, r);
      add_entry(tmp, c, i, j, v);
      m += tmp;
    }
  }
  for (std::size_t a = 0; a < active.size(); ++a) reduced.h[a] = g[a] * n_map;
}

std::vector<double> PreparedProblem::Impl::entries_at(const VectorXd& s) const {
  const VectorXd sf = s_base + n_map * s;
  std::vector<double> x = x0;
  for (std::size_t f = 0; f < free_cols.size(); ++f)
    if (sf[f] != 0.0)
      for (auto& [e, v] : directions[f]) x[e] += sf[f] * v;
  return x;
}

std::vector<MatrixXd> PreparedProblem::Impl::blocks_of(const std::vector<double>& x) const {
  std::vector<MatrixXd> out;
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const int n = problem.block_dim(static_cast<int>(b));
    MatrixXd m = MatrixXd::Zero(n, n);
    if (problem.is_diagonal(static_cast<int>(b))) {
      for (int i = 0; i < n; ++i) m(i, i) = x[layout.offset[layout.first_cone[b] + i]];
    } else {
      const int c = layout.first_cone[b];
      for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) m(i, j) = m(j, i) = x[layout.index(c, i, j)];
    }
    out.push_back(std::move(m));
  }
  return out;
}

// Restricts to the face exposed by the phase-one dual: the range of Y is orthogonal
// to every feasible slack, so slack * range(Y) = 0 is imposed by least squares.
void PreparedProblem::Impl::numeric_face(const std::vector<MatrixXd>& y) {
  const int d = reduced.params;
  std::vector<MatrixXd> w(active.size());
  int rows = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (y[a] + y[a].transpose()));
    const VectorXd ev = es.eigenvalues().reverse();
    const MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    const double top = ev.size() ? ev[0] : 0.0;
    int cut = 0;
    double best = 1e3;
    for (int i = 0; i + 1 < ev.size(); ++i) {
      if (ev[i] < 1e-8 * top) break;
      const double ratio = ev[i] / std::max(ev[i + 1], 1e-16 * top);
      if (ratio > best) {
        best = ratio;
        cut = i + 1;
      }
    }
    w[a] = vecs.leftCols(cut);
    rows += static_cast<int>(w[a].rows() * w[a].cols());
  }
  if (rows == 0) return;

  MatrixXd amat(rows, d);
  VectorXd rhs(rows);
  int r0 = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto n = reduced.h0[a].rows();
    const auto kk = w[a].cols();
    if (kk == 0) continue;
    const MatrixXd b0 = reduced.h0[a] * w[a];
    rhs.segment(r0, n * kk) = -Eigen::Map<const VectorXd>(b0.data(), n * kk);
    for (int j = 0; j < d; ++j) {
      Eigen::Map<const MatrixXd> hj(reduced.h[a].col(j).data(), n, n);
      const MatrixXd t = hj * w[a];
      amat.col(j).segment(r0, n * kk) = Eigen::Map<const VectorXd>(t.data(), n * kk);
    }
    r0 += static_cast<int>(n * kk);
  }
  Eigen::BDCSVD<MatrixXd> svd(amat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const MatrixXd& u = svd.matrixU();
  const MatrixXd& v = svd.matrixV();
  const VectorXd urhs = u.transpose() * rhs;
  // Candidate ranks sit at gaps of the spectrum; the smallest consistent one keeps the largest face.
  std::vector<int> candidates;
  for (int i = 0; i + 1 < sv.size(); ++i)
    if (sv[i] > 0 && sv[i] > kRankGap * sv[i + 1]) candidates.push_back(i + 1);
  if (sv.size() > 0 && sv[sv.size() - 1] > 0) candidates.push_back(static_cast<int>(sv.size()));
  const double scale = 1.0 + rhs.norm();
  int rank = 0;
  double resid = rhs.norm();
  for (int cand : candidates) {
    // The residual of the truncated solve is the norm of rhs outside the leading singular vectors.
    const double rr = urhs.tail(urhs.size() - cand).norm();
    if (rr < resid) {
      rank = cand;
      resid = rr;
    }
    if (rr <= kFaceTol * scale) break;
  }
  if (resid > kFaceTol * scale) {
    log("numeric face: rejected, least-squares residual %.3e", resid);
    return;
  }
  VectorXd s0 = VectorXd::Zero(d);
  for (int i = 0; i < rank; ++i) s0 += v.col(i) * (urhs[i] / sv[i]);
  face_residual = std::max(face_residual, resid);
  log("numeric face: rank %g, least-squares residual %.3e", rank, resid);

  s_base += n_map * s0;
  n_map = n_map * v.rightCols(d - rank);
  for (std::size_t a = 0; a < active.size(); ++a) {
    if (w[a].cols() == 0) continue;
    const int c = active[a];
    k[c] = k[c] * complement(w[a], static_cast<int>(w[a].rows()));
    kernel_dim += static_cast<int>(w[a].cols());
  }
  build_reduced();
}

void PreparedProblem::Impl::phase_one_loop() {
  // Parametrization before any numeric face; only certified reductions may prove infeasibility.
  struct Snapshot {
    VectorXd s_base;
    MatrixXd n_map;
    std::vector<MatrixXd> k;
    int kernel_dim;
    double face_residual;
  };
  std::optional<Snapshot> certified;
  for (int round = 0; round < kMaxFaceRounds; ++round) {
    // maximize t  s.t.  H(s) - t I >= 0,  1 - t >= 0
    ParametricSdp p1;
    const int d = reduced.params;
    p1.params = d + 1;
    for (std::size_t a = 0; a < reduced.h0.size(); ++a) {
      const auto n = reduced.h0[a].rows();
      p1.h0.push_back(reduced.h0[a]);
      MatrixXd h(n * n, d + 1);
      h.leftCols(d) = reduced.h[a];
      MatrixXd minus_i = -MatrixXd::Identity(n, n);
      h.col(d) = Eigen::Map<VectorXd>(minus_i.data(), n * n);
      p1.h.push_back(std::move(h));
    }
    p1.h0.push_back(MatrixXd::Ones(1, 1));
    MatrixXd hb = MatrixXd::Zero(1, d + 1);
    hb(0, d) = -1.0;
    p1.h.push_back(hb);
    VectorXd c = VectorXd::Zero(d + 1);
    c[d] = 1.0;
    const auto r = detail::interior_point(p1, c, kPhaseOneTol, 100, false);
    const double t = r.primal_objective;
    log("phase one: t = %.3e after %g iterations", t, r.iterations);
    if (t > kInteriorMargin) return;
    if (t < -kInteriorMargin && certified) {
      log("numeric face: discarded, phase one went negative");
      s_base = certified->s_base;
      n_map = certified->n_map;
      k = certified->k;
      kernel_dim = certified->kernel_dim;
      face_residual = certified->face_residual;
      build_reduced();
      return;
    }
    if (t < -kInteriorMargin && r.residuals.primal < 1e-7 && r.residuals.dual < 1e-7) {
      feasibility = Status::kInfeasible;
      reason = "no positive semidefinite point satisfies the constraints (phase one)";
      return;
    }
    const int before = kernel_dim;
    if (!certified) certified = Snapshot{s_base, n_map, k, kernel_dim, face_residual};
    std::vector<MatrixXd> y(r.y.begin(), r.y.begin() + static_cast<long>(reduced.h0.size()));
    numeric_face(y);
    if (kernel_dim == before) return;
  }
}

VectorXd PreparedProblem::Impl::recover_dual(const std::vector<Entry>& c, double sign,
                                             const std::vector<MatrixXd>& y) const {
  const int m = static_cast<int>(problem.constraints.size());
  std::vector<int> row0(active.size());
  int rows = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    row0[a] = rows;
    const auto r = k[active[a]].cols();
    rows += static_cast<int>(r * (r + 1) / 2);
  }
  std::vector<int> slot(layout.dims.size(), -1);
  for (std::size_t a = 0; a < active.size(); ++a) slot[active[a]] = static_cast<int>(a);

  auto project = [&](const std::vector<Entry>& es, VectorXd& out, double scale) {
    std::vector<MatrixXd> acc(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto r = k[active[a]].cols();
      acc[a] = MatrixXd::Zero(r, r);
    }
    for (const Entry& e : es) {
      const int cone = layout.cone_of(e.block, e.i);
      if (slot[cone] < 0) continue;
      const int i = layout.local(e.block, e.i), j = layout.local(e.block, e.j);
      const auto ki = k[cone].row(i);
      const auto kj = k[cone].row(j);
      MatrixXd& m2 = acc[slot[cone]];
      if (i == j)
        m2.noalias() += e.value * ki.transpose() * ki;
      else
        m2.noalias() += e.value * (ki.transpose() * kj + kj.transpose() * ki);
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto r = acc[a].rows();
      int t = row0[a];
      for (int jj = 0; jj < r; ++jj)
        for (int ii = 0; ii <= jj; ++ii) out[t++] += scale * acc[a](ii, jj);
    }
  };

  if (!dual_map) {
    MatrixXd b = MatrixXd::Zero(rows, m);
    for (int i = 0; i < m; ++i) {
      VectorXd col = VectorXd::Zero(rows);
      project(canonical(problem.constraints[i].entries, "constraint"), col, 1.0);
      b.col(i) = col;
    }
    dual_gram.emplace(b * b.transpose());
    dual_map = std::move(b);
  }
  VectorXd rhs = VectorXd::Zero(rows);
  project(canonical(c, "objective"), rhs, sign);
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto r = y[a].rows();
    int t = row0[a];
    for (int jj = 0; jj < r; ++jj)
      for (int ii = 0; ii <= jj; ++ii) rhs[t++] += y[a](ii, jj);
  }
  const VectorXd z = dual_gram->solve(rhs);
  return sign * (dual_map->transpose() * z);
}

PreparedProblem::PreparedProblem(const SdpProblem& problem, const SolveOptions& options)
    : impl_(std::make_unique<Impl>(problem, options)) {
  problem.validate();
  Impl& s = *impl_;
  if (!s.presolve()) {
    s.feasibility = Status::kInfeasible;
    return;
  }
  s.certified_faces();
  if (s.feasibility == Status::kInfeasible) return;
  s.build_reduced();
  s.phase_one_loop();
}

PreparedProblem::~PreparedProblem() = default;
PreparedProblem::PreparedProblem(PreparedProblem&&) noexcept = default;
PreparedProblem& PreparedProblem::operator=(PreparedProblem&&) noexcept = default;

Status PreparedProblem::feasibility() const { return impl_->feasibility; }
int PreparedProblem::free_dimension() const { return impl_->reduced.params; }
int PreparedProblem::kernel_dimension() const { return impl_->kernel_dim; }
double PreparedProblem::face_residual() const { return impl_->face_residual; }
std::vector<int> PreparedProblem::reduced_blocks() const {
  std::vector<int> out;
  for (auto& h : impl_->reduced.h0) out.push_back(static_cast<int>(h.rows()));
  return out;
}

SdpSolution PreparedProblem::solve() const { return solve(impl_->problem.objective, impl_->problem.sense); }

SdpSolution PreparedProblem::solve(const std::vector<Entry>& objective, Sense sense) const {
  const Impl& s = *impl_;
  SdpSolution sol;
  const int m = static_cast<int>(s.problem.constraints.size());
  if (s.feasibility == Status::kInfeasible) {
    sol.status = Status::kInfeasible;
    for (std::size_t b = 0; b < s.problem.blocks.size(); ++b) {
      const int n = s.problem.block_dim(static_cast<int>(b));
      sol.primal.push_back(MatrixXd::Zero(n, n));
    }
    sol.dual = VectorXd::Zero(m);
    return sol;
  }
  const double sign = sense == Sense::kMax ? 1.0 : -1.0;
  {
    SdpProblem probe;
    probe.blocks = s.problem.blocks;
    probe.objective = objective;
    probe.validate();
  }
  const SparseVec cfun = s.layout.functional(canonical(objective, "objective"));
  double c0 = 0.0;
  const SparseVec cred = s.reducer.reduce(cfun, c0);
  VectorXd cf = VectorXd::Zero(s.free_cols.size());
  {
    std::vector<int> pos(s.layout.entries, -1);
    for (std::size_t f = 0; f < s.free_cols.size(); ++f) pos[s.free_cols[f]] = static_cast<int>(f);
    for (auto& [e, v] : cred) cf[pos[e]] += v;
  }
  c0 += cf.dot(s.s_base);
  const VectorXd c = sign * (s.n_map.transpose() * cf);
  const double c0_int = sign * c0;

  auto r = detail::interior_point(s.reduced, c, s.options.tolerance, s.options.max_iterations, s.options.verbose);
  if (r.status == Status::kNumericalFailure) {
    s.log("solve: retrying with HKM directions");
    auto alt = detail::interior_point(s.reduced, c, s.options.tolerance, s.options.max_iterations, s.options.verbose,
                                      detail::Scaling::kHKM);
    const auto err = [](const detail::IpmResult& x) {
      return std::max({x.residuals.primal, x.residuals.dual, x.residuals.gap});
    };
    if (alt.status == Status::kOptimal || err(alt) < err(r)) r = std::move(alt);
  }
  const std::vector<double> x = s.entries_at(r.s);
  sol.primal = s.blocks_of(x);
  sol.iterations = r.iterations;
  sol.residuals = r.residuals;
  sol.objective = sign * (r.primal_objective + c0_int);
  sol.status = r.status;
  if (sol.status == Status::kOptimal && s.face_residual > 10.0 * s.options.tolerance)
    sol.status = Status::kNumericalFailure;
  if (r.y.size() == s.active.size())
    sol.dual = s.recover_dual(objective, sign, r.y);
  else
    sol.dual = VectorXd::Zero(m);
  return sol;
}

SdpSolution solve(const SdpProblem& problem, const SolveOptions& options) {
  return PreparedProblem(problem, options).solve();
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "fail") << ": primal residual " << primal_residual << ", min eigenvalue ";
  double mn = 0.0;
  for (double v : min_eigenvalues) mn = std::min(mn, v);
  os << (min_eigenvalues.empty() ? 0.0 : *std::min_element(min_eigenvalues.begin(), min_eigenvalues.end()))
     << ", gap " << gap;
  return os.str();
}

CheckReport check_solution(const SdpProblem& problem, const SdpSolution& solution, double tol) {
  CheckReport rep;
  const int nb = static_cast<int>(problem.blocks.size());
  auto inner = [&](const std::vector<Entry>& es) {
    double v = 0.0;
    for (const Entry& e : canonical(es, "data")) {
      const MatrixXd& x = solution.primal.at(e.block);
      v += e.value * (e.i == e.j ? x(e.i, e.i) : x(e.i, e.j) + x(e.j, e.i));
    }
    return v;
  };
  for (const Constraint& c : problem.constraints)
    rep.primal_residual = std::max(rep.primal_residual, std::abs(inner(c.entries) - c.rhs));
  for (int b = 0; b < nb; ++b) rep.min_eigenvalues.push_back(min_eigenvalue(solution.primal.at(b)));

  const double pobj = inner(problem.objective);
  if (solution.dual.size() == static_cast<int>(problem.constraints.size())) {
    double dobj = 0.0;
    std::vector<MatrixXd> z;
    for (int b = 0; b < nb; ++b) {
      const int n = problem.block_dim(b);
      z.push_back(MatrixXd::Zero(n, n));
    }
    const double sign = problem.sense == Sense::kMax ? 1.0 : -1.0;
    auto add = [&](const std::vector<Entry>& es, double w) {
      for (const Entry& e : canonical(es, "data")) {
        z[e.block](e.i, e.j) += w * e.value;
        if (e.i != e.j) z[e.block](e.j, e.i) += w * e.value;
      }
    };
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
      dobj += problem.constraints[i].rhs * solution.dual[i];
      add(problem.constraints[i].entries, sign * solution.dual[i]);
    }
    add(problem.objective, -sign);
    rep.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    rep.dual_slack_min_eigenvalue = 0.0;
    for (auto& zb : z) rep.dual_slack_min_eigenvalue = std::min(rep.dual_slack_min_eigenvalue, min_eigenvalue(zb));
  } else {
    rep.gap = std::numeric_limits<double>::infinity();
  }
  double mn = 0.0;
  for (double v : rep.min_eigenvalues) mn = std::min(mn, v);
  rep.passed = rep.primal_residual <= tol && mn >= -tol && rep.gap <= tol;
  return rep;
}

}  // namespace seqnpa::sdp
