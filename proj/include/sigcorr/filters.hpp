#pragma once

// Test functions (amplifier transfer kernels), overlap integrals, and
// discrete application to recorded signal increments.

#include "sigcorr/densemath.hpp"

#include <span>
#include <vector>

namespace sigcorr {

// A filter kernel with finite effective support. The exponential kind is the
// causal first-order filter f^t(u) = theta(t - u) * lambda * exp(-lambda (t - u)),
// truncated where the neglected tail mass of |f| drops below 1e-12.
class TestFunction {
  public:
    enum class Kind { Exponential, Box, Tabulated };

    static TestFunction exponential(double t, double lambda);
    static TestFunction box(double a, double b, double height);
    static TestFunction tabulated(std::vector<double> grid, std::vector<double> values);

    double operator()(double u) const;

    Kind kind() const { return kind_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    double center() const { return t_; }      // exponential only
    double bandwidth() const { return lambda_; }

    // Same kernel translated by s in time.
    TestFunction shifted(double s) const;

    // Upper bound on |f| over its support.
    double peak() const;

    // Integral of |f| over the support (exact for the closed-form kinds,
    // trapezoidal for tabulated). Used for error budgeting.
    double mass() const;

  private:
    TestFunction() = default;
    Kind kind_ = Kind::Box;
    double lo_ = 0, hi_ = 0;
    double t_ = 0, lambda_ = 0;   // exponential
    double height_ = 0;           // box
    std::vector<double> grid_, values_;  // tabulated (uniform grid)
};

// Integral of f*g over the intersection of supports. Closed form for
// exponential x exponential, adaptive quadrature otherwise. Symmetric.
double overlap(const TestFunction& f, const TestFunction& g);

// Left-point Riemann sum of the stochastic integral I(f) = int f dr over a
// uniform increment grid; increments[i] spans [t0 + i*dt, t0 + (i+1)*dt).
// Throws if the grid does not cover the support of f.
double apply_filter(const TestFunction& f, double t0, double dt,
                    std::span<const double> increments);

// One-pass recursion for the exponential family:
//   y <- y * exp(-lambda*dt) + lambda * dr
// evaluated up to time t (a grid point). Agrees with apply_filter up to
// support truncation.
double apply_exponential_recursive(double t, double lambda, double t0, double dt,
                                   std::span<const double> increments);

}  // namespace sigcorr
