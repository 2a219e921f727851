#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace autoedit {

using Vec = std::vector<double>;

// Dense row-major matrix, sized once at construction.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// y = W x + b
inline void affine(const Matrix& w, const Vec& b, const Vec& x, Vec& y) {
    if (static_cast<int>(x.size()) != w.cols || static_cast<int>(b.size()) != w.rows)
        throw std::invalid_argument("affine: shape mismatch");
    y.assign(b.begin(), b.end());
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.data.data() + static_cast<std::size_t>(r) * w.cols;
        double acc = 0.0;
        for (int c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

// dx += W^T dy
inline void affine_backprop_input(const Matrix& w, const Vec& dy, Vec& dx) {
    for (int r = 0; r < w.rows; ++r) {
        const double* wr = w.data.data() + static_cast<std::size_t>(r) * w.cols;
        const double g = dy[r];
        for (int c = 0; c < w.cols; ++c) dx[c] += wr[c] * g;
    }
}

// dW += dy x^T, db += dy
inline void affine_accumulate_grads(const Vec& dy, const Vec& x, Matrix& dw, Vec& db) {
    for (int r = 0; r < dw.rows; ++r) {
        double* gr = dw.data.data() + static_cast<std::size_t>(r) * dw.cols;
        const double g = dy[r];
        for (int c = 0; c < dw.cols; ++c) gr[c] += g * x[c];
        db[r] += g;
    }
}

inline void relu_inplace(Vec& v) {
    for (double& x : v)
        if (x < 0.0) x = 0.0;
}

// dz = dy masked by the post-activation pattern (a == 0 kills the gradient)
inline void relu_backprop(const Vec& post, Vec& dy) {
    for (std::size_t i = 0; i < post.size(); ++i)
        if (post[i] <= 0.0) dy[i] = 0.0;
}

}  // namespace autoedit
