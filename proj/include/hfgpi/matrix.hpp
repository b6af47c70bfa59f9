#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace hfgpi {

// Dense row-major matrix of 64-bit reals. The workhorse value type for every
// tensor in the pipeline; desk scale, so no sparse storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::string shape_str(const Matrix& m);

// Throws InputError if any entry is NaN/Inf; `what` names the offender.
void require_finite(const Matrix& m, const std::string& what);

// Value-level kernels (no differentiation; the tape has its own recorded ops).
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double c);
double frobenius_sq(const Matrix& m);
double row_dot(const Matrix& m, std::size_t i, std::size_t j);
double row_norm(const Matrix& m, std::size_t i);

} // namespace hfgpi
