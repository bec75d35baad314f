#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "stamp/errors.hpp"
#include "stamp/linalg.hpp"

namespace stamp {

// Reverse-mode autodiff over dense matrices. Nodes are appended in evaluation
// order, so walking them backwards is a valid topological sweep. Scalars are
// 1x1 matrices. A Tape is built per forward pass and thrown away afterwards.
template <typename T>
class Tape {
public:
    using M = Mat<T>;

    // Backward closures capture the tape's address.
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf that never receives a gradient (data, constants).
    int input(M value) { return push(std::move(value), nullptr); }

    // Leaf whose gradient is wanted after backward().
    int param(const M& value) { return push(value, nullptr); }

    const M& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    const M& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
    T scalar(int id) const { return value(id)(0, 0); }

    int matmul(int a, int b) {
        check_inner(value(a).cols(), value(b).rows(), "matmul");
        M v = value(a) * value(b);
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g * value(b).transpose());
            accumulate(b, value(a).transpose() * g);
        });
    }

    // a * b^T
    int matmul_nt(int a, int b) {
        check_inner(value(a).cols(), value(b).cols(), "matmul_nt");
        M v = value(a) * value(b).transpose();
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g * value(b));
            accumulate(b, g.transpose() * value(a));
        });
    }

    int transpose(int a) {
        M v = value(a).transpose();
        return push(std::move(v), [this, a](const M& g, int) {
            accumulate(a, g.transpose());
        });
    }

    int add(int a, int b) {
        check_same(a, b, "add");
        M v = value(a) + value(b);
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g);
            accumulate(b, g);
        });
    }

    int sub(int a, int b) {
        check_same(a, b, "sub");
        M v = value(a) - value(b);
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g);
            accumulate(b, -g);
        });
    }

    // Elementwise product.
    int mul(int a, int b) {
        check_same(a, b, "mul");
        M v = value(a).cwiseProduct(value(b));
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g.cwiseProduct(value(b)));
            accumulate(b, g.cwiseProduct(value(a)));
        });
    }

    int scale(int a, T c) {
        M v = value(a) * c;
        return push(std::move(v), [this, a, c](const M& g, int) {
            accumulate(a, g * c);
        });
    }

    // Adds a 1xC row vector to every row of a.
    int add_rowvec(int a, int row) {
        if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
            throw ShapeError("add_rowvec: bias must be 1 x cols(a)");
        M v = value(a);
        for (Eigen::Index r = 0; r < v.rows(); ++r) v.row(r) += value(row).row(0);
        return push(std::move(v), [this, a, row](const M& g, int) {
            accumulate(a, g);
            accumulate(row, g.colwise().sum());
        });
    }

    int concat_rows(int a, int b) {
        if (value(a).cols() != value(b).cols())
            throw ShapeError("concat_rows: column mismatch");
        M v(value(a).rows() + value(b).rows(), value(a).cols());
        v.topRows(value(a).rows()) = value(a);
        v.bottomRows(value(b).rows()) = value(b);
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g.topRows(value(a).rows()));
            accumulate(b, g.bottomRows(value(b).rows()));
        });
    }

    int concat_cols(int a, int b) {
        if (value(a).rows() != value(b).rows())
            throw ShapeError("concat_cols: row mismatch");
        M v(value(a).rows(), value(a).cols() + value(b).cols());
        v.leftCols(value(a).cols()) = value(a);
        v.rightCols(value(b).cols()) = value(b);
        return push(std::move(v), [this, a, b](const M& g, int) {
            accumulate(a, g.leftCols(value(a).cols()));
            accumulate(b, g.rightCols(value(b).cols()));
        });
    }

    int slice_rows(int a, Eigen::Index r0, Eigen::Index n) {
        if (r0 < 0 || n < 1 || r0 + n > value(a).rows())
            throw ShapeError("slice_rows: range out of bounds");
        M v = value(a).middleRows(r0, n);
        return push(std::move(v), [this, a, r0, n](const M& g, int) {
            M full = M::Zero(value(a).rows(), value(a).cols());
            full.middleRows(r0, n) = g;
            accumulate(a, std::move(full));
        });
    }

    int slice_cols(int a, Eigen::Index c0, Eigen::Index n) {
        if (c0 < 0 || n < 1 || c0 + n > value(a).cols())
            throw ShapeError("slice_cols: range out of bounds");
        M v = value(a).middleCols(c0, n);
        return push(std::move(v), [this, a, c0, n](const M& g, int) {
            M full = M::Zero(value(a).rows(), value(a).cols());
            full.middleCols(c0, n) = g;
            accumulate(a, std::move(full));
        });
    }

    // Prepends p zero rows.
    int pad_rows_front(int a, Eigen::Index p) {
        if (p < 0) throw ShapeError("pad_rows_front: negative pad");
        M v = M::Zero(value(a).rows() + p, value(a).cols());
        v.bottomRows(value(a).rows()) = value(a);
        return push(std::move(v), [this, a](const M& g, int) {
            accumulate(a, g.bottomRows(value(a).rows()));
        });
    }

    int relu(int a) {
        M v = value(a).cwiseMax(T(0));
        return push(std::move(v), [this, a](const M& g, int) {
            M mask = (value(a).array() > T(0)).template cast<T>().matrix();
            accumulate(a, g.cwiseProduct(mask));
        });
    }

    int tanh_op(int a) {
        M v = value(a).array().tanh().matrix();
        return push(std::move(v), [this, a](const M& g, int out) {
            const M& y = value(out);
            accumulate(a, (g.array() * (T(1) - y.array().square())).matrix());
        });
    }

    int sigmoid(int a) {
        M v = (T(1) / (T(1) + (-value(a).array()).exp())).matrix();
        return push(std::move(v), [this, a](const M& g, int out) {
            const M& y = value(out);
            accumulate(a, (g.array() * y.array() * (T(1) - y.array())).matrix());
        });
    }

    // Exact GELU, x * Phi(x).
    int gelu(int a) {
        constexpr T inv_sqrt2 = T(0.7071067811865475244L);
        M v = value(a).unaryExpr([](T x) {
            return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
        });
        return push(std::move(v), [this, a](const M& g, int) {
            constexpr T inv_sqrt2pi = T(0.3989422804014326779L);
            M der = value(a).unaryExpr([](T x) {
                return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) +
                       x * inv_sqrt2pi * std::exp(T(-0.5) * x * x);
            });
            accumulate(a, g.cwiseProduct(der));
        });
    }

    // Row-wise softmax with max subtraction.
    int softmax_rows(int a) {
        M v = value(a);
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            T mx = v.row(r).maxCoeff();
            v.row(r) = (v.row(r).array() - mx).exp().matrix();
            v.row(r) /= v.row(r).sum();
        }
        return push(std::move(v), [this, a](const M& g, int out) {
            const M& y = value(out);
            M ga(y.rows(), y.cols());
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                T dot = g.row(r).cwiseProduct(y.row(r)).sum();
                ga.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
            }
            accumulate(a, std::move(ga));
        });
    }

    // Row-wise layer norm with affine scale/shift (both 1 x cols).
    int layer_norm(int a, int scale_id, int shift_id, T eps = T(1e-5)) {
        const M& x = value(a);
        if (value(scale_id).cols() != x.cols() || value(shift_id).cols() != x.cols())
            throw ShapeError("layer_norm: scale/shift must be 1 x cols");
        M xhat(x.rows(), x.cols());
        M inv_std(x.rows(), 1);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            T mean = x.row(r).mean();
            T var = (x.row(r).array() - mean).square().mean();
            T is = T(1) / std::sqrt(var + eps);
            inv_std(r, 0) = is;
            xhat.row(r) = ((x.row(r).array() - mean) * is).matrix();
        }
        M v(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            v.row(r) = xhat.row(r).cwiseProduct(value(scale_id).row(0)) +
                       value(shift_id).row(0);
        return push(std::move(v),
                    [this, a, scale_id, shift_id, xhat, inv_std](const M& g, int) {
            accumulate(shift_id, g.colwise().sum());
            accumulate(scale_id, g.cwiseProduct(xhat).colwise().sum());
            M ga(g.rows(), g.cols());
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                auto gy = (g.row(r).cwiseProduct(value(scale_id).row(0))).eval();
                T mean_gy = gy.mean();
                T mean_gy_xhat = gy.cwiseProduct(xhat.row(r)).mean();
                ga.row(r) = ((gy.array() - mean_gy -
                              xhat.row(r).array() * mean_gy_xhat) *
                             inv_std(r, 0))
                                .matrix();
            }
            accumulate(a, std::move(ga));
        });
    }

    // Column-wise max over rows; gradient routes to the (first) argmax row.
    int colwise_max(int a) {
        const M& x = value(a);
        M v(1, x.cols());
        std::vector<Eigen::Index> arg(static_cast<size_t>(x.cols()));
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            Eigen::Index best = 0;
            for (Eigen::Index r = 1; r < x.rows(); ++r)
                if (x(r, c) > x(best, c)) best = r;
            arg[static_cast<size_t>(c)] = best;
            v(0, c) = x(best, c);
        }
        return push(std::move(v), [this, a, arg](const M& g, int) {
            M full = M::Zero(value(a).rows(), value(a).cols());
            for (Eigen::Index c = 0; c < full.cols(); ++c)
                full(arg[static_cast<size_t>(c)], c) = g(0, c);
            accumulate(a, std::move(full));
        });
    }

    int mean_rows(int a) {
        M v = value(a).colwise().mean();
        return push(std::move(v), [this, a](const M& g, int) {
            T inv = T(1) / T(value(a).rows());
            accumulate(a, g.replicate(value(a).rows(), 1) * inv);
        });
    }

    // -log(max(p[0, idx], floor)); the floor keeps the loss finite.
    int pick_log_loss(int probs, Eigen::Index idx, T floor) {
        const M& p = value(probs);
        if (p.rows() != 1 || idx < 0 || idx >= p.cols())
            throw ShapeError("pick_log_loss: probs must be a row vector with valid index");
        M v(1, 1);
        v(0, 0) = -std::log(std::max(p(0, idx), floor));
        return push(std::move(v), [this, probs, idx, floor](const M& g, int) {
            const M& p2 = value(probs);
            M full = M::Zero(1, p2.cols());
            if (p2(0, idx) > floor) full(0, idx) = -g(0, 0) / p2(0, idx);
            accumulate(probs, std::move(full));
        });
    }

    // Mean over ordered row pairs i != j of relu(cosine(row_i, row_j)).
    // Zero rows have cosine 0 against anything. Single-row input yields 0.
    int pairwise_cosine_penalty(int h) {
        const M& x = value(h);
        const Eigen::Index m = x.rows();
        M v(1, 1);
        if (m < 2) {
            v(0, 0) = T(0);
            return push(std::move(v), [this, h](const M&, int) {
                accumulate(h, M::Zero(value(h).rows(), value(h).cols()));
            });
        }
        M norms(m, 1);
        for (Eigen::Index i = 0; i < m; ++i) norms(i, 0) = x.row(i).norm();
        T sum = T(0);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                if (i == j) continue;
                T denom = norms(i, 0) * norms(j, 0);
                T c = denom > T(0) ? x.row(i).dot(x.row(j)) / denom : T(0);
                if (c > T(0)) sum += c;
            }
        const T pairs = T(m) * T(m - 1);
        v(0, 0) = sum / pairs;
        return push(std::move(v), [this, h, norms, pairs](const M& g, int) {
            const M& x2 = value(h);
            const Eigen::Index m2 = x2.rows();
            M gx = M::Zero(m2, x2.cols());
            const T w = g(0, 0) * T(2) / pairs; // each unordered pair appears twice
            for (Eigen::Index i = 0; i < m2; ++i) {
                if (!(norms(i, 0) > T(0))) continue;
                for (Eigen::Index j = 0; j < m2; ++j) {
                    if (i == j || !(norms(j, 0) > T(0))) continue;
                    T denom = norms(i, 0) * norms(j, 0);
                    T c = x2.row(i).dot(x2.row(j)) / denom;
                    if (c <= T(0)) continue;
                    gx.row(i) += w * (x2.row(j) / denom -
                                      x2.row(i) * (c / (norms(i, 0) * norms(i, 0))));
                }
            }
            accumulate(h, std::move(gx));
        });
    }

    // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
    void backward(int root) {
        if (value(root).rows() != 1 || value(root).cols() != 1)
            throw ShapeError("backward: root must be scalar");
        for (auto& n : nodes_) n.grad = M::Zero(n.value.rows(), n.value.cols());
        nodes_[static_cast<size_t>(root)].grad(0, 0) = T(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            auto& n = nodes_[static_cast<size_t>(i)];
            if (n.back) n.back(n.grad, i);
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    using BackFn = std::function<void(const M& upstream, int self)>;

    struct Node {
        M value;
        M grad;
        BackFn back;
    };

    int push(M v, BackFn back) {
        nodes_.push_back(Node{std::move(v), M(), std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    template <typename Expr>
    void accumulate(int id, const Expr& g) {
        auto& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.size() == 0) n.grad = M::Zero(n.value.rows(), n.value.cols());
        n.grad += g;
    }

    static void check_inner(Eigen::Index a, Eigen::Index b, const char* op) {
        if (a != b) throw ShapeError(std::string(op) + ": inner dimensions differ");
    }

    void check_same(int a, int b, const char* op) const {
        if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
            throw ShapeError(std::string(op) + ": shape mismatch");
    }

    std::vector<Node> nodes_;
};

} // namespace stamp
