#include "icmvc/numkit/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "icmvc/error.hpp"

namespace icmvc::numkit {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

ConstView view(const Matrix& m) { return ConstView(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                                   static_cast<Eigen::Index>(m.cols())); }
View view(Matrix& m) { return View(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                   static_cast<Eigen::Index>(m.cols())); }

// Graph operators are mostly zeros; those products go through the
// zero-skipping kernels below instead of dense GEMM.
bool mostly_zero(const Matrix& m) {
    const auto zeros = std::count(m.data().begin(), m.data().end(), 0.0);
    return 2 * static_cast<std::size_t>(zeros) > m.size();
}

// out += a * b, skipping zero entries of a.
void sparse_left_product(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double* bd = b.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = out.data().data() + i * m;
        const double* arow = a.data().data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = arow[p];
            if (s == 0.0) continue;
            const double* brow = bd + p * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += s * brow[j];
        }
    }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not match " + shape_string());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double Matrix::item() const {
    if (rows_ != 1 || cols_ != 1) throw DimensionError("item(): matrix is " + shape_string());
    return data_[0];
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
    require_same_shape(*this, o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    require_same_shape(*this, o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    if (a.empty() || b.empty()) return out;
    if (mostly_zero(a)) {
        sparse_left_product(a, b, out);
    } else {
        view(out).noalias() = view(a) * view(b);
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
    }
    Matrix out(a.rows(), b.rows());
    if (a.empty() || b.empty()) return out;
    view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    if (a.empty() || b.empty()) return out;
    if (mostly_zero(a)) {
        sparse_left_product(transpose(a), b, out);
    } else {
        view(out).noalias() = view(a).transpose() * view(b);
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

Matrix hconcat(std::span<const Matrix> parts) {
    if (parts.empty()) return {};
    const std::size_t n = parts.front().rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != n) throw DimensionError("hconcat: row count mismatch");
        total += p.cols();
    }
    Matrix out(n, total);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t offset = 0;
        for (const auto& p : parts) {
            std::copy(p.row(i).begin(), p.row(i).end(), out.row(i).begin() + offset);
            offset += p.cols();
        }
    }
    return out;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= a.rows()) throw DimensionError("select_rows: index out of range");
        std::copy(a.row(rows[i]).begin(), a.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

}  // namespace icmvc::numkit
