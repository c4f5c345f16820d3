#pragma once

// Internal: primal-dual interior-point method for the parametric form
//   maximize c.s  subject to  H0 + sum_f s_f H_f >= 0   (block diagonal)
// with dual  minimize H0.Y  subject to  H_f.Y = -c_f,  Y >= 0.

#include <Eigen/Dense>
#include <vector>

#include "seqnpa/sdpcore.hpp"

namespace seqnpa::sdp::detail {

struct ParametricSdp {
  std::vector<Eigen::MatrixXd> h0;  // per block
  std::vector<Eigen::MatrixXd> h;   // per block, column f holds vec(H_f)
  int params = 0;

  int blocks() const { return static_cast<int>(h0.size()); }
  Eigen::MatrixXd slack(int b, const Eigen::VectorXd& s) const;
};

struct IpmResult {
  Eigen::VectorXd s;
  std::vector<Eigen::MatrixXd> y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  Residuals residuals;
  int iterations = 0;
  Status status = Status::kNumericalFailure;
};

// Nesterov-Todd or Helmberg-Kojima-Monteiro search directions.
enum class Scaling { kNT, kHKM };

IpmResult interior_point(const ParametricSdp& p, const Eigen::VectorXd& c, double tol, int max_iterations,
                         bool verbose, Scaling scaling = Scaling::kNT);

}  // namespace seqnpa::sdp::detail
