#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqnpa/sdpcore.hpp"
#include "seqnpa/seqalgebra.hpp"

namespace seqnpa {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inner products <phi_z|phi_z'> of the prepared states.
struct GramSpec {
  Eigen::MatrixXd lambda;

  int n() const { return static_cast<int>(lambda.rows()); }
  // Symmetric, unit diagonal, positive semidefinite within 1e-9.
  void validate() const;

  // |0>, |+>, |->, |1> up to phases.
  static GramSpec qrac();
};

// Ordered operator list; index 0 is the identity.
struct OperatorSet {
  NetworkShape shape;
  std::vector<CanonicalWord> words;

  int size() const { return static_cast<int>(words.size()); }
  int index_of(const CanonicalWord& w) const;  // -1 when absent
};

// Identity plus every site operator (k = 1); level k + 1 adds all nonzero S_k * S_1 products.
OperatorSet level_set(const NetworkShape& shape, int k);

// Validates and prepends the identity when missing.
OperatorSet custom_set(const NetworkShape& shape, std::vector<CanonicalWord> words);

struct LinearExpr {
  std::vector<std::pair<int, double>> terms;  // (variable id, coefficient)
  double constant = 0.0;

  void add(int var, double coef) { terms.emplace_back(var, coef); }
  LinearExpr& operator+=(const LinearExpr& o);
  LinearExpr& operator*=(double s);
  // Sorted, duplicates merged, exact zeros dropped.
  LinearExpr normalized() const;
  double evaluate(const Eigen::VectorXd& vars) const;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

enum class Relation { kEq, kGe, kLe };

struct ExtraConstraint {
  LinearExpr expr;
  Relation relation = Relation::kEq;
  double rhs = 0.0;
};

// Content of one moment-matrix position.
struct EntryRef {
  enum class Kind { kConstant, kVariable };
  Kind kind = Kind::kConstant;
  double value = 0.0;  // constant value (lambda entry or structural zero)
  int var = -1;

  bool is_variable() const { return kind == Kind::kVariable; }
};

// Variable-indexed moment matrix G with rows and columns (z, i) -> z * l + i.
class MomentModel {
 public:
  const OperatorSet& set() const { return set_; }
  const GramSpec& gram() const { return gram_; }
  int dim() const { return gram_.n() * set_.size(); }
  int position(int z, int i) const { return z * set_.size() + i; }
  int num_variables() const { return static_cast<int>(var_keys_.size()); }

  const EntryRef& entry(int p, int q) const { return pattern_[static_cast<std::size_t>(p) * dim() + q]; }
  // Canonical word of entry (i, j) of any block: adjoint(S_i) * S_j.
  const CanonicalWord& entry_word(int i, int j) const;
  // Representative (word, z, z') of a variable.
  const CanonicalWord& variable_word(int var) const;
  std::pair<int, int> variable_states(int var) const;
  // Upper-triangular position holding the variable first.
  std::pair<int, int> variable_position(int var) const { return var_pos_.at(var); }

  // Equalities expr == 0 from no-signaling and normalization identities.
  const std::vector<LinearExpr>& relations() const { return relations_; }
  const std::vector<ExtraConstraint>& extra_constraints() const { return extra_; }

  // <phi_z| w |phi_z'> as an expression. Words outside the table are derived from
  // the no-signaling identities when possible. Throws ModelError otherwise.
  LinearExpr word_expr(const CanonicalWord& w, int z, int zp) const;

  void add_constraint(const LinearExpr& expr, Relation rel, double rhs);

  // Vectors expected in the kernel of every feasible G: null vectors of lambda
  // spread over one word, and operator identities applied to the state columns.
  std::vector<sdp::KernelHint> kernel_hints() const;

  // Entries of G as an assignment -> variable values (first occurrence wins).
  Eigen::VectorXd variables_of(const Eigen::MatrixXd& g) const;

 private:
  friend MomentModel build_model(const OperatorSet& set, const GramSpec& gram);

  OperatorSet set_;
  GramSpec gram_;
  std::vector<int> entry_word_id_;  // l * l
  std::vector<CanonicalWord> table_;
  std::map<CanonicalWord, int> table_id_;
  std::vector<std::pair<int, std::pair<int, int>>> var_keys_;  // (table id, (z, z'))
  std::map<std::pair<int, std::pair<int, int>>, int> var_id_;
  std::vector<std::pair<int, int>> var_pos_;
  std::vector<EntryRef> pattern_;
  std::vector<LinearExpr> relations_;
  std::vector<ExtraConstraint> extra_;
  mutable std::map<CanonicalWord, std::optional<std::vector<std::pair<int, double>>>> derived_;

  EntryRef resolve(int table_id, int z, int zp) const;
  std::optional<std::vector<std::pair<int, double>>> derive(const CanonicalWord& w) const;
};

MomentModel build_model(const OperatorSet& set, const GramSpec& gram);

// p(outcomes | inputs, z). outcomes[p] may be a prefix of party p's receivers
// (trailing outcomes summed); a party with empty inputs and outcomes is left out.
LinearExpr prob_expr(const MomentModel& model, const std::vector<std::vector<int>>& party_outcomes,
                     const std::vector<std::vector<int>>& party_inputs, int z);

// Block 0 holds G; each inequality adds a 1x1 slack block. The objective constant
// is not part of the SDP: add objective.constant to the optimum.
sdp::SdpProblem to_sdp(const MomentModel& model, const LinearExpr& objective, sdp::Sense sense);

// Objective data for reuse with sdp::PreparedProblem.
std::vector<sdp::Entry> objective_entries(const MomentModel& model, const LinearExpr& objective);

// Largest violation of a candidate G: constant entries, shared variables,
// relations and extra equalities; and its smallest eigenvalue.
struct AssignmentReport {
  double max_violation = 0.0;
  double min_eigenvalue = 0.0;
  bool feasible(double tol) const { return max_violation <= tol && min_eigenvalue >= -tol; }
};
AssignmentReport check_assignment(const MomentModel& model, const Eigen::MatrixXd& g);

// Rows and columns of `from` whose words belong to `to`'s set, in `to`'s order.
Eigen::MatrixXd restrict_assignment(const MomentModel& from, const MomentModel& to, const Eigen::MatrixXd& g);

// States and site-operator matrices of a concrete quantum model.
struct Realization {
  std::vector<Eigen::VectorXcd> states;
  std::function<Eigen::MatrixXcd(const SiteOperator&)> op;
};

// G with entries Re <phi_z| S_i^dagger S_j |phi_z'>.
Eigen::MatrixXd moment_matrix(const MomentModel& model, const Realization& r);

}  // namespace seqnpa
