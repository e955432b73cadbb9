#include "icmvc/numkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icmvc/error.hpp"

namespace icmvc::numkit {

const Matrix& Var::value() const { return tape_->value(*this); }
Matrix Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn fn) {
    bool needs = false;
    for (const Var& p : parents) {
        if (p.tape_ != this) throw ContractError("operands recorded on different tapes");
        needs = needs || nodes_[p.id_].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, needs});
    return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var target, const Matrix& grad) {
    Node& n = nodes_[target.id_];
    if (!n.requires_grad) return;
    if (!grad.same_shape(n.value)) {
        throw DimensionError("gradient shape " + grad.shape_string() + " does not match value " +
                             n.value.shape_string());
    }
    if (n.grad.empty()) {
        n.grad = grad;
    } else {
        n.grad += grad;
    }
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_[v.id_];
    if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::zero_grad() {
    for (Node& n : nodes_) n.grad = Matrix();
}

void Tape::backward(Var root) {
    if (root.tape_ != this) throw ContractError("backward: root belongs to another tape");
    const Matrix& rv = nodes_[root.id_].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw ContractError("backward: root must be 1x1, got " + rv.shape_string());
    }
    zero_grad();
    if (!nodes_[root.id_].requires_grad) return;
    nodes_[root.id_].grad = Matrix::scalar(1.0);
    for (std::size_t id = root.id_ + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.empty() || !n.backward) continue;
        n.backward(n.grad);
    }
}

namespace {

struct Shape {
    std::size_t rows;
    std::size_t cols;
};

Shape broadcast_shape(const Matrix& a, const Matrix& b, const char* op) {
    auto dim = [&](std::size_t x, std::size_t y) {
        if (x == y || y == 1) return x;
        if (x == 1) return y;
        throw DimensionError(std::string(op) + ": cannot broadcast " + a.shape_string() + " with " +
                             b.shape_string());
    };
    return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

// Sums a gradient of the broadcast output shape back down to `like`'s shape.
Matrix reduce_to(const Matrix& g, const Matrix& like) {
    if (g.same_shape(like)) return g;
    Matrix out(like.rows(), like.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        const std::size_t r = like.rows() == 1 ? 0 : i;
        for (std::size_t j = 0; j < g.cols(); ++j) {
            const std::size_t c = like.cols() == 1 ? 0 : j;
            out(r, c) += g(i, j);
        }
    }
    return out;
}

inline double at_broadcast(const Matrix& m, std::size_t i, std::size_t j) {
    return m(m.rows() == 1 ? 0 : i, m.cols() == 1 ? 0 : j);
}

double safe_denominator(double b, Guard guard) {
    if (std::abs(b) >= kEpsilon) return b;
    if (guard == Guard::strict) {
        if (b == 0.0) throw DomainError("division by zero");
        return b;
    }
    return b < 0.0 ? -kEpsilon : kEpsilon;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var elementwise(Var a, Var b, BinaryOp kind) {
    Tape& tape = *a.tape();
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const Shape s = broadcast_shape(av, bv, "elementwise");
    const Guard guard = tape.guard();
    Matrix out(s.rows, s.cols);
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.cols; ++j) {
            const double x = at_broadcast(av, i, j);
            const double y = at_broadcast(bv, i, j);
            double r = 0.0;
            switch (kind) {
                case BinaryOp::add: r = x + y; break;
                case BinaryOp::sub: r = x - y; break;
                case BinaryOp::mul: r = x * y; break;
                case BinaryOp::div: r = x / safe_denominator(y, guard); break;
            }
            out(i, j) = r;
        }
    }
    const Var parents[] = {a, b};
    return tape.record(std::move(out), parents, [a, b, kind, guard, s](const Matrix& g) {
        Tape& t = *a.tape();
        const Matrix& av = a.value();
        const Matrix& bv = b.value();
        if (a.requires_grad()) {
            Matrix ga(s.rows, s.cols);
            for (std::size_t i = 0; i < s.rows; ++i) {
                for (std::size_t j = 0; j < s.cols; ++j) {
                    const double y = at_broadcast(bv, i, j);
                    switch (kind) {
                        case BinaryOp::add:
                        case BinaryOp::sub: ga(i, j) = g(i, j); break;
                        case BinaryOp::mul: ga(i, j) = g(i, j) * y; break;
                        case BinaryOp::div: ga(i, j) = g(i, j) / safe_denominator(y, guard); break;
                    }
                }
            }
            t.accumulate(a, reduce_to(ga, av));
        }
        if (b.requires_grad()) {
            Matrix gb(s.rows, s.cols);
            for (std::size_t i = 0; i < s.rows; ++i) {
                for (std::size_t j = 0; j < s.cols; ++j) {
                    const double x = at_broadcast(av, i, j);
                    const double y = at_broadcast(bv, i, j);
                    switch (kind) {
                        case BinaryOp::add: gb(i, j) = g(i, j); break;
                        case BinaryOp::sub: gb(i, j) = -g(i, j); break;
                        case BinaryOp::mul: gb(i, j) = g(i, j) * x; break;
                        case BinaryOp::div:
                            // Clamped denominators are locally constant.
                            gb(i, j) = (guard == Guard::strict || std::abs(y) >= kEpsilon)
                                          ? -g(i, j) * x / (y * y)
                                          : 0.0;
                            break;
                    }
                }
            }
            t.accumulate(b, reduce_to(gb, bv));
        }
    });
}

Var unary(Var a, UnaryOp kind) {
    Tape& tape = *a.tape();
    const Matrix& av = a.value();
    const Guard guard = tape.guard();
    Matrix out(av.rows(), av.cols());
    for (std::size_t k = 0; k < av.size(); ++k) {
        const double x = av.data()[k];
        double r = 0.0;
        switch (kind) {
            case UnaryOp::relu: r = x > 0.0 ? x : 0.0; break;
            case UnaryOp::sigmoid: r = stable_sigmoid(x); break;
            case UnaryOp::exp: r = std::exp(x); break;
            case UnaryOp::log:
                if (guard == Guard::strict && !(x > 0.0)) {
                    throw DomainError("log of non-positive value " + std::to_string(x));
                }
                r = guard == Guard::strict ? std::log(x) : std::log(std::max(x, kEpsilon));
                break;
            case UnaryOp::sqrt: r = std::sqrt(std::max(x, 0.0)); break;
            case UnaryOp::square: r = x * x; break;
            case UnaryOp::neg: r = -x; break;
        }
        out.data()[k] = r;
    }
    const Var parents[] = {a};
    return tape.record(out, parents, [a, kind, guard, out](const Matrix& g) {
        const Matrix& av = a.value();
        Matrix ga(av.rows(), av.cols());
        for (std::size_t k = 0; k < av.size(); ++k) {
            const double x = av.data()[k];
            const double y = out.data()[k];
            const double gk = g.data()[k];
            double d = 0.0;
            switch (kind) {
                case UnaryOp::relu: d = x > 0.0 ? gk : 0.0; break;
                case UnaryOp::sigmoid: d = gk * y * (1.0 - y); break;
                case UnaryOp::exp: d = gk * y; break;
                case UnaryOp::log:
                    d = (guard == Guard::strict || x > kEpsilon) ? gk / x : 0.0;
                    break;
                case UnaryOp::sqrt: d = gk / (2.0 * std::max(y, kEpsilon)); break;
                case UnaryOp::square: d = 2.0 * x * gk; break;
                case UnaryOp::neg: d = -gk; break;
            }
            ga.data()[k] = d;
        }
        a.tape()->accumulate(a, ga);
    });
}

Var reduce(Var a, Reduction kind) {
    Tape& tape = *a.tape();
    const Matrix& av = a.value();
    const std::size_t n = av.rows(), m = av.cols();
    Matrix out;
    std::vector<std::size_t> argmax;
    switch (kind) {
        case Reduction::sum:
        case Reduction::mean: {
            double s = 0.0;
            for (double v : av.data()) s += v;
            if (kind == Reduction::mean) {
                if (av.empty()) throw DimensionError("mean of empty matrix");
                s /= static_cast<double>(av.size());
            }
            out = Matrix::scalar(s);
            break;
        }
        case Reduction::row_sum: {
            out = Matrix(n, 1);
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (double v : av.row(i)) s += v;
                out(i, 0) = s;
            }
            break;
        }
        case Reduction::col_sum: {
            out = Matrix(1, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) out(0, j) += av(i, j);
            break;
        }
        case Reduction::row_max: {
            if (m == 0) throw DimensionError("row_max of matrix without columns");
            out = Matrix(n, 1);
            argmax.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < m; ++j)
                    if (av(i, j) > av(i, best)) best = j;
                argmax[i] = best;
                out(i, 0) = av(i, best);
            }
            break;
        }
    }
    const Var parents[] = {a};
    return tape.record(std::move(out), parents, [a, kind, argmax = std::move(argmax)](const Matrix& g) {
        const Matrix& av = a.value();
        const std::size_t n = av.rows(), m = av.cols();
        Matrix ga(n, m);
        switch (kind) {
            case Reduction::sum:
            case Reduction::mean: {
                double v = g.item();
                if (kind == Reduction::mean) v /= static_cast<double>(av.size());
                std::fill(ga.data().begin(), ga.data().end(), v);
                break;
            }
            case Reduction::row_sum:
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) ga(i, j) = g(i, 0);
                break;
            case Reduction::col_sum:
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) ga(i, j) = g(0, j);
                break;
            case Reduction::row_max:
                for (std::size_t i = 0; i < n; ++i) ga(i, argmax[i]) = g(i, 0);
                break;
        }
        a.tape()->accumulate(a, ga);
    });
}

Var matmul(Var a, Var b) {
    Matrix out = matmul(a.value(), b.value());
    const Var parents[] = {a, b};
    return a.tape()->record(std::move(out), parents, [a, b](const Matrix& g) {
        Tape& t = *a.tape();
        if (a.requires_grad()) t.accumulate(a, matmul_nt(g, b.value()));
        if (b.requires_grad()) t.accumulate(b, matmul_tn(a.value(), g));
    });
}

Var transpose(Var a) {
    const Var parents[] = {a};
    return a.tape()->record(transpose(a.value()), parents, [a](const Matrix& g) {
        a.tape()->accumulate(a, transpose(g));
    });
}

Var scale(Var a, double s) {
    const Var parents[] = {a};
    return a.tape()->record(a.value() * s, parents, [a, s](const Matrix& g) {
        a.tape()->accumulate(a, g * s);
    });
}

Var add_scalar(Var a, double s) {
    Matrix out = a.value();
    for (double& v : out.data()) v += s;
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [a](const Matrix& g) {
        a.tape()->accumulate(a, g);
    });
}

Var row_softmax(Var a, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("row_softmax: temperature must be positive");
    const Matrix& av = a.value();
    const std::size_t n = av.rows(), m = av.cols();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -INFINITY;
        for (double v : av.row(i)) mx = std::max(mx, v);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double e = std::exp((av(i, j) - mx) / temperature);
            out(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < m; ++j) out(i, j) /= z;
    }
    const Var parents[] = {a};
    return a.tape()->record(out, parents, [a, out, temperature](const Matrix& g) {
        const std::size_t n = out.rows(), m = out.cols();
        Matrix ga(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += g(i, j) * out(i, j);
            for (std::size_t j = 0; j < m; ++j)
                ga(i, j) = out(i, j) * (g(i, j) - dot) / temperature;
        }
        a.tape()->accumulate(a, ga);
    });
}

Var row_l2_normalize(Var a) {
    const Matrix& av = a.value();
    const std::size_t n = av.rows(), m = av.cols();
    Matrix out(n, m);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : av.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) out(i, j) = av(i, j) / norms[i];
    }
    const Var parents[] = {a};
    return a.tape()->record(out, parents, [a, out, norms = std::move(norms)](const Matrix& g) {
        const std::size_t n = out.rows(), m = out.cols();
        Matrix ga(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            if (norms[i] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += g(i, j) * out(i, j);
            for (std::size_t j = 0; j < m; ++j) ga(i, j) = (g(i, j) - out(i, j) * dot) / norms[i];
        }
        a.tape()->accumulate(a, ga);
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    std::vector<Matrix> values;
    values.reserve(parts.size());
    for (const Var& p : parts) values.push_back(p.value());
    Matrix out = hconcat(values);
    std::vector<Var> owned(parts.begin(), parts.end());
    return parts.front().tape()->record(std::move(out), parts, [owned](const Matrix& g) {
        std::size_t offset = 0;
        for (const Var& p : owned) {
            const std::size_t w = p.cols();
            if (p.requires_grad()) {
                Matrix gp(g.rows(), w);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < w; ++j) gp(i, j) = g(i, offset + j);
                p.tape()->accumulate(p, gp);
            }
            offset += w;
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Matrix& av = a.value();
    if (begin + count > av.cols()) throw DimensionError("slice_cols: range exceeds " + av.shape_string());
    Matrix out(av.rows(), count);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, begin + j);
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [a, begin, count](const Matrix& g) {
        Matrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < count; ++j) ga(i, begin + j) = g(i, j);
        a.tape()->accumulate(a, ga);
    });
}

Var diagonal(Var a) {
    const Matrix& av = a.value();
    if (av.rows() != av.cols()) throw DimensionError("diagonal: matrix is " + av.shape_string());
    Matrix out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) out(i, 0) = av(i, i);
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [a](const Matrix& g) {
        Matrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) ga(i, i) = g(i, 0);
        a.tape()->accumulate(a, ga);
    });
}

}  // namespace icmvc::numkit
