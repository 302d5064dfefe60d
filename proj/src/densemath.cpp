#include "sigcorr/densemath.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace sigcorr {

Matrix expm(const Matrix& M, double t) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument("expm: matrix must be square");
    }
    Matrix R = (t * M).exp();
    if (!R.allFinite()) {
        throw NumericError("expm: non-finite result, ||t*M|| = " +
                           std::to_string((t * M).norm()));
    }
    return R;
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix C(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return C;
}

Vector vec(const Matrix& A) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("vec: matrix must be square");
    }
    return Eigen::Map<const Vector>(A.data(), A.size());
}

Matrix unvec(const Vector& v, Eigen::Index d) {
    if (v.size() != d * d) {
        throw std::invalid_argument("unvec: length must be d^2");
    }
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix lmul(const Matrix& X) {
    Matrix id = Matrix::Identity(X.rows(), X.cols());
    return kron(id, X);
}

Matrix rmul(const Matrix& Y) {
    Matrix id = Matrix::Identity(Y.rows(), Y.cols());
    return kron(Y.transpose(), id);
}

Complex trace_of_vec(const Vector& v) {
    auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
    Complex tr = 0;
    for (Eigen::Index c = 0; c < d; ++c) tr += v(c * (d + 1));
    return tr;
}

namespace {

struct Panel {
    double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

}  // namespace

double quad(const std::function<double(double)>& f, double a, double b,
            const QuadOptions& opt) {
    if (a > b) throw std::invalid_argument("quad: requires a <= b");
    if (a == b) return 0.0;

    // Recursive bisection with a shared panel budget; each panel carries its
    // own share of the absolute tolerance.
    long panels = 0;
    double worst_err = 0.0;
    bool exhausted = false;

    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double tol,
            int depth) -> double {
        double whole = simpson(lo, hi, flo, fmid, fhi);
        double m = 0.5 * (lo + hi);
        double fl = f(0.5 * (lo + m));
        double fr = f(0.5 * (m + hi));
        double left = simpson(lo, m, flo, fl, fmid);
        double right = simpson(m, hi, fmid, fr, fhi);
        double err = (left + right - whole) / 15.0;
        panels += 2;
        if (std::abs(err) <= tol || depth > 52) {
            worst_err = std::max(worst_err, std::abs(err));
            return left + right + err;  // Richardson correction
        }
        if (panels > opt.max_panels) {
            exhausted = true;
            worst_err = std::max(worst_err, std::abs(err));
            return left + right + err;
        }
        return rec(lo, m, flo, fl, fmid, 0.5 * tol, depth + 1) +
               rec(m, hi, fmid, fr, fhi, 0.5 * tol, depth + 1);
    };

    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    double result = rec(a, b, fa, fm, fb, opt.tol, 0);
    if (exhausted) {
        throw NumericError("quad: panel budget exhausted, worst panel error " +
                           std::to_string(worst_err));
    }
    return result;
}

namespace {

void enumerate_pairings(std::vector<int>& free_idx, Pairing& current,
                        std::vector<Pairing>& out) {
    if (free_idx.empty()) {
        out.push_back(current);
        return;
    }
    int first = free_idx.front();
    for (std::size_t j = 1; j < free_idx.size(); ++j) {
        int partner = free_idx[j];
        std::vector<int> rest;
        rest.reserve(free_idx.size() - 2);
        for (std::size_t k = 1; k < free_idx.size(); ++k)
            if (k != j) rest.push_back(free_idx[k]);
        current.emplace_back(first, partner);
        enumerate_pairings(rest, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<Pairing> pairings(int m) {
    if (m < 0) throw std::invalid_argument("pairings: m must be >= 0");
    std::vector<Pairing> out;
    std::vector<int> idx(2 * m);
    for (int i = 0; i < 2 * m; ++i) idx[i] = i;
    Pairing current;
    enumerate_pairings(idx, current, out);
    return out;
}

double double_factorial_odd(int m) {
    double r = 1.0;
    for (int k = 2 * m - 1; k > 1; k -= 2) r *= k;
    return r;
}

}  // namespace sigcorr
