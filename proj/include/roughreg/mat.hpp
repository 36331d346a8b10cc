#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace roughreg {

// Small dense row-major matrix. Blocks and integral values here are d x d or
// n x d with d rarely above 3, so no attempt at clever storage is made.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
    }

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    Mat transposed() const {
        Mat t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a) m = std::max(m, std::fabs(v));
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
        return *this;
    }
    Mat& operator*=(double c) {
        for (double& v : a) v *= c;
        return *this;
    }

    friend Mat operator+(Mat x, const Mat& y) { return x += y; }
    friend Mat operator-(Mat x, const Mat& y) { return x -= y; }
    friend Mat operator*(Mat x, double c) { return x *= c; }
    friend Mat operator*(double c, Mat x) { return x *= c; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// x y^T for vectors given as spans.
inline Mat outer(std::span<const double> x, std::span<const double> y) {
    Mat m(static_cast<int>(x.size()), static_cast<int>(y.size()));
    for (size_t i = 0; i < x.size(); ++i)
        for (size_t j = 0; j < y.size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = x[i] * y[j];
    return m;
}

inline double max_abs_diff(const Mat& x, const Mat& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i) m = std::max(m, std::fabs(x.a[i] - y.a[i]));
    return m;
}

// Row values (1 x d results of the integrals) are plain vectors.
using Row = std::vector<double>;

inline double max_abs(const Row& r) {
    double m = 0.0;
    for (double v : r) m = std::max(m, std::fabs(v));
    return m;
}

inline double max_abs_diff(const Row& x, const Row& y) {
    if (x.size() != y.size()) throw std::invalid_argument("max_abs_diff: length mismatch");
    double m = 0.0;
    for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

inline Row row_sub(const Row& x, const Row& y) {
    Row r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

}  // namespace roughreg
