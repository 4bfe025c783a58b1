#pragma once

#include <functional>

#include "pgdpo/linalg.hpp"

namespace fd {

using pgdpo::Mat;
using pgdpo::Vec;

/// Central-difference Jacobian of f: R^n -> R^k at x.
inline Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    const Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (f(xp) - f(xm)) / (2 * h);
    }
    return J;
}

inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    return jacobian([&](const Vec& y) { return Vec::Constant(1, f(y)); }, x, h).row(0).transpose();
}

inline double rel_err(const Mat& a, const Mat& b, double floor = 1e-8) {
    return (a - b).norm() / std::max(floor, b.norm());
}

}  // namespace fd
