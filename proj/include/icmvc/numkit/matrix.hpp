#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace icmvc::numkit {

/// Dense row-major matrix of doubles. Value type; copies are deep.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }
    static Matrix identity(std::size_t n);
    static Matrix scalar(double v) { return Matrix(1, 1, v); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_string() const;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Value of a 1x1 matrix.
    double item() const;

    bool all_finite() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

Matrix transpose(const Matrix& a);

/// a * b. Zero entries of `a` are skipped, which makes products with
/// sparse propagation operators and ReLU outputs cheap.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix hconcat(std::span<const Matrix> parts);
Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows);

double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

}  // namespace icmvc::numkit
