#pragma once

// Internal: entry layout and incremental sparse Gauss-Jordan elimination.

#include <utility>
#include <vector>

#include "seqnpa/sdpcore.hpp"

namespace seqnpa::sdp::detail {

using SparseVec = std::vector<std::pair<int, double>>;  // sorted by index

// Scalar diagonal blocks are expanded into 1x1 cones. Entries of each cone are
// numbered upper-triangular, column by column.
struct Layout {
  std::vector<int> dims;         // per cone
  std::vector<int> offset;       // first entry index per cone
  std::vector<int> first_cone;   // per external block
  std::vector<char> diagonal;    // per external block
  int entries = 0;

  explicit Layout(const SdpProblem& p);

  int cone_of(int block, int i) const;
  int local(int block, int i) const;  // row index inside the cone
  int index(int cone, int i, int j) const {
    if (i > j) std::swap(i, j);
    return offset[cone] + j * (j + 1) / 2 + i;
  }
  int index_of(const Entry& e) const;
  // Weight of an entry in a trace inner product: 1 on the diagonal, 2 off it.
  static double weight(int i, int j) { return i == j ? 1.0 : 2.0; }
  // Inner-product functional of a sparse symmetric coefficient list.
  SparseVec functional(const std::vector<Entry>& entries) const;
};

// Keeps rows in reduced row echelon form: x[pivot] + sum(terms) = rhs, where
// terms only reference free columns.
class Reducer {
 public:
  enum class AddResult { kAdded, kRedundant, kInconsistent };

  explicit Reducer(int columns);

  AddResult add(const SparseVec& row, double rhs, double tol);
  // Substitutes pivots: v.x == constant + reduced.x_free on the affine set.
  SparseVec reduce(const SparseVec& v, double& constant) const;

  int columns() const { return n_; }
  bool is_pivot(int col) const { return pivot_row_[col] >= 0; }
  std::vector<int> free_columns() const;
  // Particular solution with every free column at zero.
  std::vector<double> particular() const;
  // Sparse direction of free column f: e_f minus the pivot dependencies.
  SparseVec direction(int f) const;

 private:
  struct Row {
    int pivot;
    SparseVec terms;
    double rhs;
  };
  int n_;
  std::vector<int> pivot_row_;
  std::vector<Row> rows_;
  std::vector<std::vector<int>> col_rows_;  // rows whose terms mention the column
  mutable std::vector<double> scratch_;
  mutable std::vector<char> touched_;
};

}  // namespace seqnpa::sdp::detail
