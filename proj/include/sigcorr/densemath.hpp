#pragma once

// Dense complex linear algebra helpers, adaptive quadrature and pairing
// enumeration used by every other module.

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sigcorr {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Numeric failure that could not be recovered from (overflow, quadrature
// budget exhaustion, degenerate spectra, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exp(t*M) via Pade scaling-and-squaring. Throws on non-square input and on
// non-finite results (extreme ||t*M||).
Matrix expm(const Matrix& M, double t);

Matrix kron(const Matrix& A, const Matrix& B);

// Column-stacking vectorization: vec(A)(c*d + r) = A(r, c).
// Under this convention vec(X rho Y) = kron(Y.transpose(), X) * vec(rho).
Vector vec(const Matrix& A);
Matrix unvec(const Vector& v, Eigen::Index d);

// Left-multiplication and right-multiplication superoperators,
// rho -> X rho and rho -> rho Y in vectorized form.
Matrix lmul(const Matrix& X);
Matrix rmul(const Matrix& Y);

// Trace of unvec(v) without reshaping.
Complex trace_of_vec(const Vector& v);

struct QuadOptions {
    double tol = 1e-10;       // absolute error target
    long max_panels = 1000000;
};

// Adaptive-bisection Simpson quadrature of f on [a, b]. Throws NumericError
// with the achieved error estimate if the panel budget is exhausted.
double quad(const std::function<double(double)>& f, double a, double b,
            const QuadOptions& opt = {});

// A perfect pairing of {0, ..., 2m-1}: m unordered index pairs.
using Pairing = std::vector<std::pair<int, int>>;

// All (2m-1)!! pairings; m = 0 yields the single empty pairing.
std::vector<Pairing> pairings(int m);

double double_factorial_odd(int m);  // (2m-1)!!

}  // namespace sigcorr
