#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace palm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised for contract violations (bad dimensions, invalid parameters,
/// points outside the feasible set).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

/// Exponent of the power penalty, restricted to (0, 1].
class Power {
 public:
  constexpr Power() = default;
  explicit Power(double nu) : nu_{nu} {
    require(nu > 0.0 && nu <= 1.0, "power must lie in (0, 1], got " + std::to_string(nu));
  }

  constexpr double value() const { return nu_; }
  constexpr operator double() const { return nu_; }
  constexpr bool is_one() const { return nu_ == 1.0; }

 private:
  double nu_ = 1.0;
};

}  // namespace palm
