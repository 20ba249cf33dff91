#pragma once

// Test-only oracles: frozen high-precision values and finite-difference checks.

#include <cmath>
#include <functional>
#include <random>

#include "ctpc/barrier.hpp"
#include "ctpc/model.hpp"

namespace oracle {

using ctpc::Mat;
using ctpc::Vec;

// Sample two-user instance at full power, evaluated with mpmath at 50 digits.
inline constexpr double kSampleS[2] = {0.222222222222222222, 0.0920245398773006135};
inline constexpr double kSampleR[2] = {0.289506617194985, 0.127005276735320};
inline constexpr double kSampleT[2] = {34.5415248082738, 78.7368860337989};
// log2(1 + 0.22222)
inline constexpr double kRateOf022222 = 0.289503994110708;
// single-user Rayleigh, q = 0.1: S* = ln(10/9), T* = 10 / log2(1 + S*)
inline constexpr double kRobustS = 0.105360515657826;
inline constexpr double kRobustT = 69.1960190161725;

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a(k) += h;
    b(k) -= h;
    g(k) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

/// Checks a barrier row's analytic gradient and Hessian against central differences.
inline double row_derivative_error(const ctpc::barrier::Row& row, const Vec& x, double h = 1e-5) {
  Vec g;
  Mat H;
  row.eval(x, &g, &H);
  auto value = [&row](const Vec& y) { return row.eval(y, nullptr, nullptr); };
  const Vec gfd = fd_gradient(value, x, h);
  double err = (g - gfd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a(k) += h;
    b(k) -= h;
    Vec ga, gb;
    row.eval(a, &ga, nullptr);
    row.eval(b, &gb, nullptr);
    const Vec col = (ga - gb) / (2 * h);
    err = std::max(err, (H.col(k) - col).cwiseAbs().maxCoeff() / std::max(1.0, H.cwiseAbs().maxCoeff()));
  }
  return err;
}

}  // namespace oracle
