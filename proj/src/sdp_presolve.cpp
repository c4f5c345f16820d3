#include "sdp_presolve.hpp"

#include <algorithm>
#include <cmath>

namespace seqnpa::sdp::detail {

namespace {
constexpr double kDrop = 1e-14;
}

Layout::Layout(const SdpProblem& p) {
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    first_cone.push_back(static_cast<int>(dims.size()));
    diagonal.push_back(p.is_diagonal(static_cast<int>(b)) ? 1 : 0);
    const int n = p.block_dim(static_cast<int>(b));
    if (p.is_diagonal(static_cast<int>(b))) {
      for (int i = 0; i < n; ++i) dims.push_back(1);
    } else {
      dims.push_back(n);
    }
  }
  for (int d : dims) {
    offset.push_back(entries);
    entries += d * (d + 1) / 2;
  }
}

int Layout::cone_of(int block, int i) const {
  return diagonal[block] ? first_cone[block] + i : first_cone[block];
}

int Layout::local(int block, int i) const { return diagonal[block] ? 0 : i; }

int Layout::index_of(const Entry& e) const {
  const int c = cone_of(e.block, e.i);
  if (dims[c] == 1) return offset[c];
  return index(c, e.i, e.j);
}

SparseVec Layout::functional(const std::vector<Entry>& entries_in) const {
  SparseVec v;
  v.reserve(entries_in.size());
  for (const Entry& e : entries_in) {
    if (e.value == 0.0) continue;
    v.emplace_back(index_of(e), e.value * weight(e.i, e.j));
  }
  std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
  SparseVec out;
  for (auto& [k, a] : v) {
    if (!out.empty() && out.back().first == k)
      out.back().second += a;
    else
      out.emplace_back(k, a);
  }
  std::erase_if(out, [](auto& t) { return t.second == 0.0; });
  return out;
}

Reducer::Reducer(int columns)
    : n_(columns), pivot_row_(columns, -1), col_rows_(columns), scratch_(columns, 0.0),
      touched_(columns, 0) {}

SparseVec Reducer::reduce(const SparseVec& v, double& constant) const {
  std::vector<int> idx;
  auto bump = [&](int c, double a) {
    if (!touched_[c]) {
      touched_[c] = 1;
      idx.push_back(c);
    }
    scratch_[c] += a;
  };
  for (const auto& [c, a] : v) {
    const int r = pivot_row_[c];
    if (r < 0) {
      bump(c, a);
      continue;
    }
    const Row& row = rows_[r];
    constant += a * row.rhs;
    for (const auto& [t, b] : row.terms) bump(t, -a * b);
  }
  std::sort(idx.begin(), idx.end());
  double scale = 0.0;
  for (int c : idx) scale = std::max(scale, std::abs(scratch_[c]));
  SparseVec out;
  for (int c : idx) {
    if (std::abs(scratch_[c]) > kDrop * std::max(1.0, scale)) out.emplace_back(c, scratch_[c]);
    scratch_[c] = 0.0;
    touched_[c] = 0;
  }
  return out;
}

Reducer::AddResult Reducer::add(const SparseVec& row, double rhs, double tol) {
  double k = 0.0;
  SparseVec red = reduce(row, k);
  double b = rhs - k;
  double scale = 0.0;
  for (auto& t : row) scale = std::max(scale, std::abs(t.second));
  const double cut = 1e-12 * std::max(1.0, scale);
  std::erase_if(red, [&](auto& t) { return std::abs(t.second) <= cut; });
  if (red.empty()) return std::abs(b) <= tol ? AddResult::kRedundant : AddResult::kInconsistent;

  double amax = 0.0;
  for (auto& t : red) amax = std::max(amax, std::abs(t.second));
  int pick = -1;
  std::size_t best_fill = 0;
  double pivot = 0.0;
  for (auto& [c, a] : red) {
    if (std::abs(a) < 0.1 * amax) continue;
    const std::size_t fill = col_rows_[c].size();
    if (pick < 0 || fill < best_fill) {
      pick = c;
      best_fill = fill;
      pivot = a;
    }
  }

  Row nr{pick, {}, b / pivot};
  for (auto& [c, a] : red)
    if (c != pick) nr.terms.emplace_back(c, a / pivot);

  // Eliminate the new pivot from existing rows.
  for (int r : col_rows_[pick]) {
    Row& row_r = rows_[r];
    auto it = std::lower_bound(row_r.terms.begin(), row_r.terms.end(), pick,
                               [](auto& t, int c) { return t.first < c; });
    if (it == row_r.terms.end() || it->first != pick) continue;
    const double coef = it->second;
    row_r.terms.erase(it);
    row_r.rhs -= coef * nr.rhs;
    SparseVec merged;
    merged.reserve(row_r.terms.size() + nr.terms.size());
    auto a = row_r.terms.begin();
    auto e = nr.terms.begin();
    while (a != row_r.terms.end() || e != nr.terms.end()) {
      if (e == nr.terms.end() || (a != row_r.terms.end() && a->first < e->first)) {
        merged.push_back(*a++);
      } else if (a == row_r.terms.end() || e->first < a->first) {
        merged.emplace_back(e->first, -coef * e->second);
        col_rows_[e->first].push_back(r);
        ++e;
      } else {
        const double v = a->second - coef * e->second;
        if (std::abs(v) > kDrop) merged.emplace_back(a->first, v);
        ++a;
        ++e;
      }
    }
    row_r.terms = std::move(merged);
  }
  col_rows_[pick].clear();
  col_rows_[pick].shrink_to_fit();

  const int id = static_cast<int>(rows_.size());
  for (auto& t : nr.terms) col_rows_[t.first].push_back(id);
  pivot_row_[pick] = id;
  rows_.push_back(std::move(nr));
  return AddResult::kAdded;
}

std::vector<int> Reducer::free_columns() const {
  std::vector<int> f;
  for (int c = 0; c < n_; ++c)
    if (pivot_row_[c] < 0) f.push_back(c);
  return f;
}

std::vector<double> Reducer::particular() const {
  std::vector<double> x(n_, 0.0);
  for (const Row& r : rows_) x[r.pivot] = r.rhs;
  return x;
}

SparseVec Reducer::direction(int f) const {
  SparseVec d{{f, 1.0}};
  for (int r : col_rows_[f]) {
    const Row& row = rows_[r];
    auto it = std::lower_bound(row.terms.begin(), row.terms.end(), f,
                               [](auto& t, int c) { return t.first < c; });
    if (it != row.terms.end() && it->first == f) d.emplace_back(row.pivot, -it->second);
  }
  std::sort(d.begin(), d.end(), [](auto& a, auto& b) { return a.first < b.first; });
  // col_rows_ may list a row twice; merge.
  SparseVec out;
  for (auto& t : d) {
    if (!out.empty() && out.back().first == t.first) continue;
    out.push_back(t);
  }
  return out;
}

}  // namespace seqnpa::sdp::detail
