#pragma once

// Independent numeric oracles used by the test suites. Nothing here calls into the symbolic
// differentiation code; functions are treated as black boxes.

#include <Eigen/Core>

#include <cmath>
#include <functional>

namespace taskopt::testing {

inline constexpr double kFiniteDifferenceStep = 1e-7;

/// Central-difference Jacobian of f: R^n -> R^m.
inline Eigen::MatrixXd central_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> & f,
                                        const Eigen::VectorXd & x, double step = kFiniteDifferenceStep)
{
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd out(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(j) += step;
    xm(j) -= step;
    out.col(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return out;
}

/// |a - b| <= abs_tol or |a - b| <= rel_tol * max(|a|, |b|), elementwise.
inline bool close(const Eigen::MatrixXd & a, const Eigen::MatrixXd & b, double rel_tol, double abs_tol)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) { return false; }
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double diff = std::abs(a.data()[k] - b.data()[k]);
    const double scale = std::max(std::abs(a.data()[k]), std::abs(b.data()[k]));
    if (!(diff <= abs_tol || diff <= rel_tol * scale)) { return false; }
  }
  return true;
}

}  // namespace taskopt::testing
