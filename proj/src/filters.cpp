#include "sigcorr/filters.hpp"

#include <algorithm>
#include <cmath>

namespace sigcorr {

namespace {
// exp(-28) ~ 7e-13: tail mass below the 1e-12 truncation target.
constexpr double kExpSupportDecades = 28.0;
}  // namespace

TestFunction TestFunction::exponential(double t, double lambda) {
    if (lambda <= 0) throw std::invalid_argument("exponential filter: lambda must be > 0");
    TestFunction f;
    f.kind_ = Kind::Exponential;
    f.t_ = t;
    f.lambda_ = lambda;
    f.lo_ = t - kExpSupportDecades / lambda;
    f.hi_ = t;
    return f;
}

TestFunction TestFunction::box(double a, double b, double height) {
    if (!(a < b)) throw std::invalid_argument("box filter: requires a < b");
    TestFunction f;
    f.kind_ = Kind::Box;
    f.lo_ = a;
    f.hi_ = b;
    f.height_ = height;
    return f;
}

TestFunction TestFunction::tabulated(std::vector<double> grid, std::vector<double> values) {
    if (grid.size() < 2 || grid.size() != values.size()) {
        throw std::invalid_argument("tabulated filter: grid/values size mismatch");
    }
    TestFunction f;
    f.kind_ = Kind::Tabulated;
    f.lo_ = grid.front();
    f.hi_ = grid.back();
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    return f;
}

double TestFunction::operator()(double u) const {
    switch (kind_) {
        case Kind::Exponential:
            if (u > t_ || u < lo_) return 0.0;
            return lambda_ * std::exp(-lambda_ * (t_ - u));
        case Kind::Box:
            return (u >= lo_ && u <= hi_) ? height_ : 0.0;
        case Kind::Tabulated: {
            if (u < lo_ || u > hi_) return 0.0;  // outside grid: zero
            auto it = std::upper_bound(grid_.begin(), grid_.end(), u);
            if (it == grid_.begin()) return values_.front();
            if (it == grid_.end()) return values_.back();
            std::size_t i = std::size_t(it - grid_.begin());
            double w = (u - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
            return (1.0 - w) * values_[i - 1] + w * values_[i];
        }
    }
    return 0.0;
}

TestFunction TestFunction::shifted(double s) const {
    TestFunction f = *this;
    f.lo_ += s;
    f.hi_ += s;
    f.t_ += s;
    for (auto& g : f.grid_) g += s;
    return f;
}

double TestFunction::peak() const {
    switch (kind_) {
        case Kind::Exponential:
            return lambda_;
        case Kind::Box:
            return std::abs(height_);
        case Kind::Tabulated: {
            double m = 0.0;
            for (double v : values_) m = std::max(m, std::abs(v));
            return m;
        }
    }
    return 0.0;
}

double TestFunction::mass() const {
    switch (kind_) {
        case Kind::Exponential:
            return 1.0 - std::exp(-kExpSupportDecades);
        case Kind::Box:
            return std::abs(height_) * (hi_ - lo_);
        case Kind::Tabulated: {
            double m = 0.0;
            for (std::size_t i = 1; i < grid_.size(); ++i) {
                m += 0.5 * (std::abs(values_[i - 1]) + std::abs(values_[i])) *
                     (grid_[i] - grid_[i - 1]);
            }
            return m;
        }
    }
    return 0.0;
}

double overlap(const TestFunction& f, const TestFunction& g) {
    if (f.kind() == TestFunction::Kind::Exponential &&
        g.kind() == TestFunction::Kind::Exponential) {
        // int_{-inf}^{min(t1,t2)} l1 e^{-l1(t1-u)} l2 e^{-l2(t2-u)} du
        const double l1 = f.bandwidth(), l2 = g.bandwidth();
        const double m = std::min(f.center(), g.center());
        return l1 * l2 / (l1 + l2) *
               std::exp(-l1 * (f.center() - m) - l2 * (g.center() - m));
    }
    const double lo = std::max(f.support_lo(), g.support_lo());
    const double hi = std::min(f.support_hi(), g.support_hi());
    if (lo >= hi) return 0.0;
    return quad([&](double u) { return f(u) * g(u); }, lo, hi);
}

double apply_filter(const TestFunction& f, double t0, double dt,
                    std::span<const double> increments) {
    const double t_end = t0 + double(increments.size()) * dt;
    if (t0 > f.support_lo() + 1e-9 || t_end < f.support_hi() - 1e-9) {
        throw std::invalid_argument("apply_filter: increment grid does not cover filter support");
    }
    // Only the support window contributes; skip the rest.
    auto first = std::size_t(std::max(0.0, std::floor((f.support_lo() - t0) / dt)));
    double acc = 0.0;
    for (std::size_t i = first; i < increments.size(); ++i) {
        const double u = t0 + double(i) * dt;
        if (u > f.support_hi()) break;
        acc += f(u) * increments[i];
    }
    return acc;
}

double apply_exponential_recursive(double t, double lambda, double t0, double dt,
                                   std::span<const double> increments) {
    const double decay = std::exp(-lambda * dt);
    const auto n = std::size_t(std::floor((t - t0) / dt + 0.5));
    if (n >= increments.size() + 1 && t > t0 + double(increments.size()) * dt + 1e-9) {
        throw std::invalid_argument("apply_exponential_recursive: t beyond increment grid");
    }
    double y = 0.0;
    const std::size_t last = std::min(n, increments.size() - 1);
    for (std::size_t i = 0; i <= last; ++i) {
        y = y * decay + lambda * increments[i];
    }
    return y;
}

}  // namespace sigcorr
