// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fdlora {

/// Dense row-major matrix of doubles.
///
/// A default-constructed Matrix is the 0x0 placeholder; every other matrix
/// has positive dimensions and finite entries. Operations below never mutate
/// their inputs and throw NumericError instead of returning NaN/Inf.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_string() const;

    /// Throws NumericError naming `context` if any entry is NaN or Inf.
    void ensure_finite(const char* context) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// alpha * a + beta * b
Matrix axpby(double alpha, const Matrix& a, double beta, const Matrix& b);
/// Adds a 1 x cols row vector to every row of `a`.
Matrix add_row(const Matrix& a, const Matrix& row);
Matrix tanh(const Matrix& a);

double sum(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Per-entry arithmetic mean of equally shaped matrices, summed pairwise in
/// index order so the result does not depend on scheduling.
Matrix pairwise_mean(std::span<const Matrix* const> items);

}  // namespace fdlora
