#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sfa {

using Vec = std::vector<double>;

// dense row-major matrix, sized for desk-scale problems
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
    double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
};

inline double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

inline double norm2(const Vec& x) { return norm2(x.data(), static_cast<int>(x.size())); }

inline double dist2(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// y = W x + b, W row-major (out x in)
inline void affine(const Mat& w, const Vec& b, const double* x, double* y) {
    for (int i = 0; i < w.rows; ++i) y[i] = b[i] + dot(w.row(i), x, w.cols);
}

inline bool all_finite(const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

inline bool all_finite(const Vec& x) { return all_finite(x.data(), x.size()); }

// quantile with linear interpolation on the sorted copy, q in [0,1]
double quantile(std::vector<double> v, double q);

} // namespace sfa
