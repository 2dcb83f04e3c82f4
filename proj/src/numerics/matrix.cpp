// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

void require_positive(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        std::ostringstream os;
        os << "matrix dimensions must be positive, got " << rows << "x" << cols;
        throw ShapeError(os.str());
    }
}

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << a.shape_string() << " and " << b.shape_string();
    throw ShapeError(os.str());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_mismatch(op, a, b);
}

Matrix pairwise_sum(std::span<const Matrix* const> items) {
    if (items.size() == 1) return *items[0];
    const std::size_t mid = items.size() / 2;
    return add(pairwise_sum(items.first(mid)), pairwise_sum(items.subspan(mid)));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
    require_positive(rows, cols);
    if (!std::isfinite(fill)) throw NumericError("matrix fill value is not finite");
    data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require_positive(rows, cols);
    if (data_.size() != rows * cols) {
        std::ostringstream os;
        os << "matrix data length " << data_.size() << " does not match shape " << shape_string();
        throw ShapeError(os.str());
    }
    ensure_finite("matrix construction");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows: ragged row lengths");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
}

std::string Matrix::shape_string() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

void Matrix::ensure_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(context) + ": non-finite value in " + shape_string() +
                               " result");
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    out.ensure_finite("matmul");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape("add", a, b);
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
    out.ensure_finite("add");
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    require_same_shape("subtract", a, b);
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
    out.ensure_finite("subtract");
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data()) v *= s;
    out.ensure_finite("scale");
    return out;
}

Matrix axpby(double alpha, const Matrix& a, double beta, const Matrix& b) {
    require_same_shape("axpby", a, b);
    Matrix out(a.rows(), a.cols());
    auto o = out.data();
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * ad[i] + beta * bd[i];
    out.ensure_finite("axpby");
    return out;
}

Matrix add_row(const Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) shape_mismatch("add_row", a, row);
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += row(0, j);
    out.ensure_finite("add_row");
    return out;
}

Matrix tanh(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data()) v = std::tanh(v);
    return out;
}

double sum(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape("max_abs_diff", a, b);
    double m = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) m = std::max(m, std::abs(ad[i] - bd[i]));
    return m;
}

Matrix pairwise_mean(std::span<const Matrix* const> items) {
    if (items.empty()) throw ContractError("pairwise_mean: no matrices given");
    for (const Matrix* m : items) require_same_shape("pairwise_mean", *items[0], *m);
    Matrix total = pairwise_sum(items);
    const double n = static_cast<double>(items.size());
    for (double& v : total.data()) v /= n;
    return total;
}

}  // namespace fdlora
