#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seqnpa::sdp {

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Sense { kMax, kMin };

// One coefficient of a symmetric block matrix, 0-based, stored once with i <= j.
struct Entry {
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;
};

struct Constraint {
  std::vector<Entry> entries;
  double rhs = 0.0;
};

// A vector v in block `block` that the producer of the problem expects to lie in
// the kernel of every feasible X. The solver only uses hints it can prove.
struct KernelHint {
  int block = 0;
  std::vector<std::pair<int, double>> vector;
};

// opt C.X  s.t.  A_i.X = b_i,  X >= 0 (block diagonal).
// A negative block size -k denotes a diagonal block of k scalar cones.
struct SdpProblem {
  std::vector<int> blocks;
  std::vector<Constraint> constraints;
  std::vector<Entry> objective;
  Sense sense = Sense::kMax;
  std::vector<KernelHint> kernel_hints;  // not part of the SDPA text

  int block_dim(int b) const { return blocks.at(b) < 0 ? -blocks.at(b) : blocks.at(b); }
  bool is_diagonal(int b) const { return blocks.at(b) < 0; }

  // Throws SdpError on bad indices, non-finite data, asymmetric duplicates,
  // or off-diagonal entries in diagonal blocks. Entries with i > j are accepted
  // as long as no conflicting (j, i) entry is present.
  void validate() const;
};

// Equal data up to entry order, duplicate summation and the i/j orientation.
bool equivalent(const SdpProblem& a, const SdpProblem& b);

enum class Status { kOptimal, kInfeasible, kUnbounded, kMaxIterations, kNumericalFailure };
std::string to_string(Status s);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct SdpSolution {
  std::vector<Eigen::MatrixXd> primal;  // one dense matrix per block
  Eigen::VectorXd dual;                 // one multiplier per constraint
  Status status = Status::kNumericalFailure;
  double objective = 0.0;
  Residuals residuals;
  int iterations = 0;
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
  bool verbose = false;
};

// Presolved and facially reduced constraint system. Reusable for any number of
// objectives over the same constraints.
class PreparedProblem {
 public:
  PreparedProblem(const SdpProblem& problem, const SolveOptions& options = {});
  ~PreparedProblem();
  PreparedProblem(PreparedProblem&&) noexcept;
  PreparedProblem& operator=(PreparedProblem&&) noexcept;

  SdpSolution solve(const std::vector<Entry>& objective, Sense sense) const;
  SdpSolution solve() const;  // the problem's own objective

  // Infeasible when presolve or phase one proves it; optimal otherwise.
  Status feasibility() const;
  // Free parameters and reduced block sizes after presolve and face reduction.
  int free_dimension() const;
  std::vector<int> reduced_blocks() const;
  int kernel_dimension() const;
  // Largest constraint residual introduced by numerically detected faces (0 when
  // every face was certified exactly).
  double face_residual() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SdpSolution solve(const SdpProblem& problem, const SolveOptions& options = {});

struct CheckReport {
  double primal_residual = 0.0;
  std::vector<double> min_eigenvalues;
  double gap = 0.0;
  double dual_slack_min_eigenvalue = 0.0;  // informational
  bool passed = false;
  std::string summary() const;
};

CheckReport check_solution(const SdpProblem& problem, const SdpSolution& solution, double tol);

std::string write_sdpa(const SdpProblem& problem);
SdpProblem read_sdpa(const std::string& text);

}  // namespace seqnpa::sdp
