#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "icmvc/numkit/matrix.hpp"

namespace icmvc::numkit {

/// Floor applied to log arguments and to division denominators.
inline constexpr double kEpsilon = 1e-12;

/// `clamp` evaluates log(max(x, eps)) and divides by max(|b|, eps);
/// `strict` raises DomainError instead.
enum class Guard { clamp, strict };

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
/// tape that created it.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    /// Gradient from the last backward pass (zeros if unreached).
    Matrix grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool requires_grad() const;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Eager reverse-mode recorder. Operations evaluate immediately and append a
/// node; backward() walks the nodes in reverse creation order, which is a
/// valid topological order because parents always precede children.
class Tape {
public:
    using BackwardFn = std::function<void(const Matrix& grad_out)>;

    explicit Tape(Guard guard = Guard::clamp) : guard_(guard) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable leaf.
    Var variable(Matrix value);
    /// Leaf excluded from differentiation.
    Var constant(Matrix value);

    /// Recomputes all gradients from a 1x1 root. Previous gradients are
    /// discarded, so repeated calls give identical results.
    void backward(Var root);
    void zero_grad();

    /// Records an operation result. `fn` receives the node's gradient and must
    /// push gradients into parents through accumulate().
    Var record(Matrix value, std::span<const Var> parents, BackwardFn fn);
    void accumulate(Var target, const Matrix& grad);

    const Matrix& value(Var v) const { return nodes_[v.id_].value; }
    Matrix grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }

    Guard guard() const { return guard_; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;  // empty until reached by backward
        BackwardFn backward;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    Guard guard_;
};

enum class BinaryOp { add, sub, mul, div };
enum class UnaryOp { relu, sigmoid, exp, log, sqrt, square, neg };
enum class Reduction { sum, mean, row_sum, col_sum, row_max };

/// Elementwise binary op with broadcasting: each dimension of an operand
/// must equal the output's or be 1.
Var elementwise(Var a, Var b, BinaryOp kind);
Var unary(Var a, UnaryOp kind);
Var reduce(Var a, Reduction kind);

Var matmul(Var a, Var b);
Var transpose(Var a);

inline Var add(Var a, Var b) { return elementwise(a, b, BinaryOp::add); }
inline Var sub(Var a, Var b) { return elementwise(a, b, BinaryOp::sub); }
inline Var mul(Var a, Var b) { return elementwise(a, b, BinaryOp::mul); }
inline Var div(Var a, Var b) { return elementwise(a, b, BinaryOp::div); }
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

Var scale(Var a, double s);
Var add_scalar(Var a, double s);

inline Var relu(Var a) { return unary(a, UnaryOp::relu); }
inline Var sigmoid(Var a) { return unary(a, UnaryOp::sigmoid); }
inline Var exp(Var a) { return unary(a, UnaryOp::exp); }
inline Var log(Var a) { return unary(a, UnaryOp::log); }
inline Var sqrt(Var a) { return unary(a, UnaryOp::sqrt); }
inline Var square(Var a) { return unary(a, UnaryOp::square); }
inline Var neg(Var a) { return unary(a, UnaryOp::neg); }

inline Var sum(Var a) { return reduce(a, Reduction::sum); }
inline Var mean(Var a) { return reduce(a, Reduction::mean); }
inline Var row_sum(Var a) { return reduce(a, Reduction::row_sum); }
inline Var col_sum(Var a) { return reduce(a, Reduction::col_sum); }
inline Var row_max(Var a) { return reduce(a, Reduction::row_max); }

/// softmax(a / temperature) along each row.
Var row_softmax(Var a, double temperature = 1.0);
/// Scales each row to unit L2 norm; all-zero rows stay zero.
Var row_l2_normalize(Var a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// Diagonal of a square matrix as an n x 1 column.
Var diagonal(Var a);

}  // namespace icmvc::numkit
