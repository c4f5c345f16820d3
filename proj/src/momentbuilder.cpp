#include "seqnpa/momentbuilder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace seqnpa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPsdTol = 1e-9;

template <typename Fn>
void for_each_tuple(const std::vector<int>& sizes, Fn&& fn) {
  std::vector<int> t(sizes.size(), 0);
  while (true) {
    fn(t);
    int i = static_cast<int>(t.size()) - 1;
    while (i >= 0 && ++t[i] == sizes[i]) t[i--] = 0;
    if (i < 0) return;
  }
}

}  // namespace

void GramSpec::validate() const {
  if (lambda.rows() == 0 || lambda.rows() != lambda.cols()) throw ModelError("Gram matrix must be square and nonempty");
  for (int i = 0; i < n(); ++i) {
    if (std::abs(lambda(i, i) - 1.0) > kPsdTol) throw ModelError("Gram matrix diagonal must be 1");
    for (int j = 0; j < n(); ++j) {
      if (!std::isfinite(lambda(i, j))) throw ModelError("Gram matrix has non-finite entries");
      if (std::abs(lambda(i, j) - lambda(j, i)) > kPsdTol) throw ModelError("Gram matrix is not symmetric");
    }
  }
  const double mn = Eigen::SelfAdjointEigenSolver<MatrixXd>(lambda, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (mn < -kPsdTol) throw ModelError("Gram matrix is not positive semidefinite");
}

GramSpec GramSpec::qrac() {
  const double r = 1.0 / std::sqrt(2.0);
  GramSpec g;
  g.lambda.resize(4, 4);
  g.lambda << 1, r, r, 0,  //
      r, 1, 0, -r,         //
      r, 0, 1, r,          //
      0, -r, r, 1;
  return g;
}

int OperatorSet::index_of(const CanonicalWord& w) const {
  auto it = std::find(words.begin(), words.end(), w);
  return it == words.end() ? -1 : static_cast<int>(it - words.begin());
}

OperatorSet level_set(const NetworkShape& shape, int k) {
  if (k < 1) throw ModelError("hierarchy level must be >= 1");
  shape.validate();
  const int np = shape.parties();
  OperatorSet s1{shape, {CanonicalWord::identity(np)}};
  for (int p = 0; p < np; ++p)
    for (const SiteOperator& op : site_operators(shape, p)) s1.words.push_back(CanonicalWord::of(np, op));
  OperatorSet cur = s1;
  for (int level = 1; level < k; ++level) {
    std::set<CanonicalWord> seen(cur.words.begin(), cur.words.end());
    OperatorSet next = cur;
    for (const CanonicalWord& a : cur.words)
      for (const CanonicalWord& b : s1.words) {
        CanonicalWord w = multiply(a, b);
        if (!w.is_zero() && seen.insert(w).second) next.words.push_back(std::move(w));
      }
    cur = std::move(next);
  }
  return cur;
}

OperatorSet custom_set(const NetworkShape& shape, std::vector<CanonicalWord> words) {
  shape.validate();
  const int np = shape.parties();
  std::set<CanonicalWord> seen;
  OperatorSet out{shape, {CanonicalWord::identity(np)}};
  for (CanonicalWord& w : words) {
    if (w.parties() != np) throw ModelError("word " + w.str() + " belongs to a different shape");
    if (w.is_zero()) throw ModelError("operator set contains the zero word");
    if (!seen.insert(w).second) throw ModelError("duplicate word " + w.str());
    if (!w.is_identity()) out.words.push_back(std::move(w));
  }
  return out;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

LinearExpr LinearExpr::normalized() const {
  LinearExpr out;
  out.constant = constant;
  std::vector<std::pair<int, double>> t = terms;
  std::sort(t.begin(), t.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (auto& [v, c] : t) {
    if (!out.terms.empty() && out.terms.back().first == v)
      out.terms.back().second += c;
    else
      out.terms.emplace_back(v, c);
  }
  std::erase_if(out.terms, [](auto& x) { return x.second == 0.0; });
  return out;
}

double LinearExpr::evaluate(const VectorXd& vars) const {
  double v = constant;
  for (auto& [k, c] : terms) v += c * vars[k];
  return v;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) {
  LinearExpr nb = b;
  nb *= -1.0;
  return a += nb;
}
LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

const CanonicalWord& MomentModel::entry_word(int i, int j) const {
  static const CanonicalWord kZero = CanonicalWord::zero(0);
  const int id = entry_word_id_.at(static_cast<std::size_t>(i) * set_.size() + j);
  return id < 0 ? kZero : table_[id];
}

const CanonicalWord& MomentModel::variable_word(int var) const { return table_.at(var_keys_.at(var).first); }
std::pair<int, int> MomentModel::variable_states(int var) const { return var_keys_.at(var).second; }

EntryRef MomentModel::resolve(int tid, int z, int zp) const {
  EntryRef r;
  if (tid < 0) return r;
  if (table_[tid].is_identity()) {
    r.value = gram_.lambda(z, zp);
    return r;
  }
  r.kind = EntryRef::Kind::kVariable;
  r.var = var_id_.at({tid, {z, zp}});
  return r;
}

MomentModel build_model(const OperatorSet& set, const GramSpec& gram) {
  gram.validate();
  if (gram.n() != set.shape.n_states)
    throw ModelError("Gram matrix has " + std::to_string(gram.n()) + " states, shape expects " +
                     std::to_string(set.shape.n_states));
  if (set.words.empty() || !set.words[0].is_identity()) throw ModelError("operator set must start with the identity");
  const int np = set.shape.parties();
  for (const auto& w : set.words)
    if (w.parties() != np) throw ModelError("word " + w.str() + " belongs to a different shape");

  MomentModel m;
  m.set_ = set;
  m.gram_ = gram;
  const int l = set.size(), n = gram.n(), dim = n * l;

  std::vector<CanonicalWord> adj;
  for (const auto& w : set.words) adj.push_back(adjoint(w));
  auto intern = [&](const CanonicalWord& w) {
    if (w.is_zero()) return -1;
    auto [it, fresh] = m.table_id_.emplace(w, static_cast<int>(m.table_.size()));
    if (fresh) m.table_.push_back(w);
    return it->second;
  };
  m.entry_word_id_.resize(static_cast<std::size_t>(l) * l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) m.entry_word_id_[static_cast<std::size_t>(i) * l + j] = intern(multiply(adj[i], set.words[j]));

  // Unify (w, z, z') with (w^dagger, z', z): the representative has the smaller
  // (word text, z, z').
  std::vector<std::string> text(m.table_.size());
  std::vector<int> adj_id(m.table_.size());
  for (std::size_t t = 0; t < m.table_.size(); ++t) {
    text[t] = m.table_[t].str();
    adj_id[t] = m.table_id_.at(adjoint(m.table_[t]));
  }
  auto key_of = [&](int tid, int z, int zp) {
    const int a = adj_id[tid];
    const auto lhs = std::tie(text[tid], z, zp);
    const auto rhs = std::tie(text[a], zp, z);
    return rhs < lhs ? std::make_pair(a, std::make_pair(zp, z)) : std::make_pair(tid, std::make_pair(z, zp));
  };

  m.pattern_.resize(static_cast<std::size_t>(dim) * dim);
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q) {
      const int z = p / l, i = p % l, zp = q / l, j = q % l;
      const int tid = m.entry_word_id_[static_cast<std::size_t>(i) * l + j];
      EntryRef& e = m.pattern_[static_cast<std::size_t>(p) * dim + q];
      if (tid < 0) continue;
      if (m.table_[tid].is_identity()) {
        e.value = gram.lambda(z, zp);
        continue;
      }
      const auto key = key_of(tid, z, zp);
      auto [it, fresh] = m.var_id_.emplace(key, static_cast<int>(m.var_keys_.size()));
      if (fresh) {
        m.var_keys_.push_back(key);
        m.var_pos_.emplace_back(std::min(p, q), std::max(p, q));
      }
      e.kind = EntryRef::Kind::kVariable;
      e.var = it->second;
    }
  // Every (w, z, z') of the table resolves, including combinations absent from
  // the matrix scan order.
  for (std::size_t t = 0; t < m.table_.size(); ++t) {
    if (m.table_[t].is_identity()) continue;
    for (int z = 0; z < n; ++z)
      for (int zp = 0; zp < n; ++zp) {
        const auto key = key_of(static_cast<int>(t), z, zp);
        if (!m.var_id_.count(key)) throw ModelError("internal: unresolved table word " + m.table_[t].str());
        m.var_id_.emplace(std::make_pair(static_cast<int>(t), std::make_pair(z, zp)), m.var_id_.at(key));
      }
  }

  // Projector words P satisfy P^dagger P = P, so the diagonal and the first row
  // already share variables; only the no-signaling sums need explicit rows.
  std::set<std::pair<std::vector<std::pair<int, double>>, double>> seen;
  const auto rels = nosignaling_relations(set.shape);
  for (int u = 0; u < l; ++u)
    for (const NoSignalingRelation& rel : rels) {
      std::vector<std::pair<int, double>> words;  // (table id, coefficient)
      bool ok = true;
      auto take = [&](const CanonicalWord& w, double c) {
        if (w.is_zero()) return;
        auto it = m.table_id_.find(w);
        if (it == m.table_id_.end()) {
          ok = false;
          return;
        }
        words.emplace_back(it->second, c);
      };
      for (const SiteOperator& op : rel.lhs) take(multiply(adj[u], CanonicalWord::of(np, op)), 1.0);
      if (rel.rhs_is_identity())
        take(adj[u], -1.0);
      else
        for (const SiteOperator& op : rel.rhs) take(multiply(adj[u], CanonicalWord::of(np, op)), -1.0);
      if (!ok) continue;
      for (int z = 0; z < n; ++z)
        for (int zp = 0; zp < n; ++zp) {
          LinearExpr e;
          for (auto& [tid, c] : words) {
            const EntryRef r = m.resolve(tid, z, zp);
            if (r.is_variable())
              e.add(r.var, c);
            else
              e.constant += c * r.value;
          }
          e = e.normalized();
          if (e.terms.empty() && e.constant == 0.0) continue;
          if (seen.insert({e.terms, e.constant}).second) m.relations_.push_back(std::move(e));
        }
    }
  return m;
}

// Expresses a word outside the table as a combination of table words using the
// no-signaling identities in every left and right context of the set.
std::optional<std::vector<std::pair<int, double>>> MomentModel::derive(const CanonicalWord& w) const {
  auto cached = derived_.find(w);
  if (cached != derived_.end()) return cached->second;

  const int np = set_.shape.parties();
  std::map<CanonicalWord, int> col;
  std::vector<CanonicalWord> cols;
  auto id = [&](const CanonicalWord& x) {
    auto [it, fresh] = col.emplace(x, static_cast<int>(cols.size()));
    if (fresh) cols.push_back(x);
    return it->second;
  };
  id(w);
  std::vector<std::vector<std::pair<int, double>>> rows;
  const auto rels = nosignaling_relations(set_.shape);
  for (const CanonicalWord& u : set_.words)
    for (int side = 0; side < 2; ++side) {
      const CanonicalWord ua = adjoint(u);
      auto apply = [&](const CanonicalWord& x) { return side == 0 ? multiply(ua, x) : multiply(x, u); };
      for (const NoSignalingRelation& rel : rels) {
        std::vector<std::pair<int, double>> row;
        auto take = [&](const CanonicalWord& x, double c) {
          if (!x.is_zero()) row.emplace_back(id(x), c);
        };
        for (const SiteOperator& op : rel.lhs) take(apply(CanonicalWord::of(np, op)), 1.0);
        if (rel.rhs_is_identity())
          take(apply(CanonicalWord::identity(np)), -1.0);
        else
          for (const SiteOperator& op : rel.rhs) take(apply(CanonicalWord::of(np, op)), -1.0);
        if (!row.empty()) rows.push_back(std::move(row));
      }
    }
  std::vector<int> table_cols;
  for (std::size_t c = 0; c < cols.size(); ++c)
    if (table_id_.count(cols[c])) table_cols.push_back(static_cast<int>(c));

  // Solve  sum_r mu_r row_r + sum_t c_t e_t = e_w.
  MatrixXd a = MatrixXd::Zero(cols.size(), rows.size() + table_cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (auto& [c, v] : rows[r]) a(c, r) += v;
  for (std::size_t t = 0; t < table_cols.size(); ++t) a(table_cols[t], rows.size() + t) = 1.0;
  VectorXd b = VectorXd::Zero(cols.size());
  b[0] = 1.0;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  const VectorXd x = cod.solve(b);
  std::optional<std::vector<std::pair<int, double>>> out;
  if ((a * x - b).norm() < 1e-9) {
    std::vector<std::pair<int, double>> combo;
    for (std::size_t t = 0; t < table_cols.size(); ++t) {
      double c = x[rows.size() + t];
      if (std::abs(c) < 1e-12) continue;
      if (std::abs(c - std::round(c)) < 1e-9) c = std::round(c);
      combo.emplace_back(table_id_.at(cols[table_cols[t]]), c);
    }
    out = std::move(combo);
  }
  derived_.emplace(w, out);
  return out;
}

LinearExpr MomentModel::word_expr(const CanonicalWord& w, int z, int zp) const {
  LinearExpr e;
  if (z < 0 || zp < 0 || z >= gram_.n() || zp >= gram_.n()) throw ModelError("state index out of range");
  if (w.is_zero()) return e;
  std::vector<std::pair<int, double>> combo;
  auto it = table_id_.find(w);
  if (it != table_id_.end()) {
    combo.emplace_back(it->second, 1.0);
  } else {
    auto d = derive(w);
    if (!d) throw ModelError("word " + w.str() + " is not representable in the operator set");
    combo = *d;
  }
  for (auto& [tid, c] : combo) {
    const EntryRef r = resolve(tid, z, zp);
    if (r.is_variable())
      e.add(r.var, c);
    else
      e.constant += c * r.value;
  }
  return e.normalized();
}

void MomentModel::add_constraint(const LinearExpr& expr, Relation rel, double rhs) {
  for (auto& [v, c] : expr.terms)
    if (v < 0 || v >= num_variables() || !std::isfinite(c)) throw ModelError("constraint references an unknown variable");
  extra_.push_back({expr.normalized(), rel, rhs});
}

std::vector<sdp::KernelHint> MomentModel::kernel_hints() const {
  std::vector<sdp::KernelHint> hints;
  const int l = set_.size(), n = gram_.n(), np = set_.shape.parties();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram_.lambda);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (int k = 0; k < n; ++k) {
    if (std::abs(es.eigenvalues()[k]) > kPsdTol * top) continue;
    const VectorXd v = es.eigenvectors().col(k);
    for (int j = 0; j < l; ++j) {
      sdp::KernelHint h;
      for (int z = 0; z < n; ++z)
        if (std::abs(v[z]) > 1e-15) h.vector.emplace_back(position(z, j), v[z]);
      hints.push_back(std::move(h));
    }
  }
  const auto rels = nosignaling_relations(set_.shape);
  for (const CanonicalWord& w : set_.words)
    for (const NoSignalingRelation& rel : rels) {
      std::map<int, double> cols;
      bool ok = true;
      auto take = [&](const CanonicalWord& x, double c) {
        if (x.is_zero()) return;
        const int idx = set_.index_of(x);
        if (idx < 0)
          ok = false;
        else
          cols[idx] += c;
      };
      for (const SiteOperator& op : rel.lhs) take(multiply(w, CanonicalWord::of(np, op)), 1.0);
      if (rel.rhs_is_identity())
        take(w, -1.0);
      else
        for (const SiteOperator& op : rel.rhs) take(multiply(w, CanonicalWord::of(np, op)), -1.0);
      std::erase_if(cols, [](auto& t) { return t.second == 0.0; });
      if (!ok || cols.empty()) continue;
      for (int z = 0; z < n; ++z) {
        sdp::KernelHint h;
        for (auto& [i, c] : cols) h.vector.emplace_back(position(z, i), c);
        hints.push_back(std::move(h));
      }
    }
  return hints;
}

VectorXd MomentModel::variables_of(const MatrixXd& g) const {
  VectorXd v(num_variables());
  for (int k = 0; k < num_variables(); ++k) v[k] = g(var_pos_[k].first, var_pos_[k].second);
  return v;
}

LinearExpr prob_expr(const MomentModel& model, const std::vector<std::vector<int>>& party_outcomes,
                     const std::vector<std::vector<int>>& party_inputs, int z) {
  const NetworkShape& shape = model.set().shape;
  const int np = shape.parties();
  if (static_cast<int>(party_outcomes.size()) != np || static_cast<int>(party_inputs.size()) != np)
    throw ModelError("prob_expr needs one outcome and one input list per party");
  // Per party: the site operators whose sum is the requested event.
  std::vector<std::vector<SiteOperator>> sums(np);
  for (int p = 0; p < np; ++p) {
    const auto& a = party_outcomes[p];
    const auto& x = party_inputs[p];
    const int m = shape.receivers(p);
    if (x.empty() && a.empty()) continue;
    if (static_cast<int>(x.size()) != m) throw ModelError("party " + std::to_string(p) + " needs a full input sequence");
    if (static_cast<int>(a.size()) > m) throw ModelError("party " + std::to_string(p) + " has too many outcomes");
    const std::vector<int> tail(shape.outcomes[p].begin() + static_cast<long>(a.size()), shape.outcomes[p].end());
    for_each_tuple(tail, [&](const std::vector<int>& t) {
      std::vector<int> full = a;
      full.insert(full.end(), t.begin(), t.end());
      sums[p].push_back(make_site_operator(shape, p, x, full));
    });
  }
  LinearExpr e;
  std::vector<int> radix;
  std::vector<int> used;
  for (int p = 0; p < np; ++p)
    if (!sums[p].empty()) {
      radix.push_back(static_cast<int>(sums[p].size()));
      used.push_back(p);
    }
  for_each_tuple(radix, [&](const std::vector<int>& pick) {
    CanonicalWord w = CanonicalWord::identity(np);
    for (std::size_t k = 0; k < used.size(); ++k) w = multiply(w, CanonicalWord::of(np, sums[used[k]][pick[k]]));
    e += model.word_expr(w, z, z);
  });
  return e.normalized();
}

namespace {

void add_var(const MomentModel& m, std::vector<sdp::Entry>& out, int var, double coef) {
  auto [p, q] = m.variable_position(var);
  out.push_back({0, p, q, p == q ? coef : 0.5 * coef});
}

}  // namespace

std::vector<sdp::Entry> objective_entries(const MomentModel& model, const LinearExpr& objective) {
  std::vector<sdp::Entry> out;
  for (auto& [v, c] : objective.normalized().terms) add_var(model, out, v, c);
  return out;
}

sdp::SdpProblem to_sdp(const MomentModel& model, const LinearExpr& objective, sdp::Sense sense) {
  sdp::SdpProblem prob;
  const int dim = model.dim();
  prob.blocks.push_back(dim);
  prob.sense = sense;
  for (int p = 0; p < dim; ++p)
    for (int q = p; q < dim; ++q) {
      const EntryRef& e = model.entry(p, q);
      const double w = p == q ? 1.0 : 0.5;
      if (!e.is_variable()) {
        prob.constraints.push_back({{{0, p, q, w}}, e.value});
        continue;
      }
      const auto rep = model.variable_position(e.var);
      if (rep == std::make_pair(p, q)) continue;
      std::vector<sdp::Entry> c{{0, p, q, w}};
      add_var(model, c, e.var, -1.0);
      prob.constraints.push_back({std::move(c), 0.0});
    }
  for (const LinearExpr& r : model.relations()) {
    sdp::Constraint c;
    for (auto& [v, k] : r.terms) add_var(model, c.entries, v, k);
    c.rhs = -r.constant;
    prob.constraints.push_back(std::move(c));
  }
  for (const ExtraConstraint& x : model.extra_constraints()) {
    sdp::Constraint c;
    for (auto& [v, k] : x.expr.terms) add_var(model, c.entries, v, k);
    c.rhs = x.rhs - x.expr.constant;
    if (x.relation != Relation::kEq) {
      const int block = static_cast<int>(prob.blocks.size());
      prob.blocks.push_back(1);
      c.entries.push_back({block, 0, 0, x.relation == Relation::kGe ? -1.0 : 1.0});
    }
    prob.constraints.push_back(std::move(c));
  }
  prob.objective = objective_entries(model, objective);
  prob.kernel_hints = model.kernel_hints();
  return prob;
}

AssignmentReport check_assignment(const MomentModel& model, const MatrixXd& g) {
  AssignmentReport rep;
  const int dim = model.dim();
  if (g.rows() != dim || g.cols() != dim) throw ModelError("assignment has the wrong size");
  auto worse = [&](double v) { rep.max_violation = std::max(rep.max_violation, std::abs(v)); };
  const VectorXd vars = model.variables_of(g);
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q) {
      const EntryRef& e = model.entry(p, q);
      worse(g(p, q) - (e.is_variable() ? vars[e.var] : e.value));
    }
  for (const LinearExpr& r : model.relations()) worse(r.evaluate(vars));
  for (const ExtraConstraint& x : model.extra_constraints()) {
    const double v = x.expr.evaluate(vars) - x.rhs;
    if (x.relation == Relation::kEq)
      worse(v);
    else if (x.relation == Relation::kGe)
      worse(std::min(v, 0.0));
    else
      worse(std::max(v, 0.0));
  }
  rep.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return rep;
}

MatrixXd restrict_assignment(const MomentModel& from, const MomentModel& to, const MatrixXd& g) {
  if (from.gram().n() != to.gram().n()) throw ModelError("state counts differ");
  std::vector<int> idx;
  for (const CanonicalWord& w : to.set().words) {
    const int i = from.set().index_of(w);
    if (i < 0) throw ModelError("word " + w.str() + " is missing from the larger set");
    idx.push_back(i);
  }
  const int l = static_cast<int>(idx.size());
  MatrixXd out(to.dim(), to.dim());
  for (int z = 0; z < to.gram().n(); ++z)
    for (int i = 0; i < l; ++i)
      for (int zp = 0; zp < to.gram().n(); ++zp)
        for (int j = 0; j < l; ++j)
          out(to.position(z, i), to.position(zp, j)) = g(from.position(z, idx[i]), from.position(zp, idx[j]));
  return out;
}

MatrixXd moment_matrix(const MomentModel& model, const Realization& r) {
  const int n = model.gram().n(), l = model.set().size();
  if (static_cast<int>(r.states.size()) != n) throw ModelError("realization has the wrong number of states");
  const auto d = r.states.front().size();
  std::map<SiteOperator, Eigen::MatrixXcd> cache;
  Eigen::MatrixXcd v(d, n * l);
  for (int i = 0; i < l; ++i) {
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(d, d);
    for (const SiteOperator& f : model.set().words[i].factors()) {
      auto it = cache.find(f);
      if (it == cache.end()) it = cache.emplace(f, r.op(f)).first;
      op = op * it->second;
    }
    for (int z = 0; z < n; ++z) v.col(model.position(z, i)) = op * r.states[z];
  }
  return (v.adjoint() * v).real();
}

}  // namespace seqnpa
