#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stamp/errors.hpp"
#include "stamp/linalg.hpp"

namespace stamp {

struct OptimizerOpts {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5; // decoupled
    int lookahead_k = 6;
    double lookahead_alpha = 0.5;
};

// RAdam with decoupled weight decay wrapped in Lookahead. While the variance
// rectification term is undefined (small step counts) the update falls back
// to the plain bias-corrected momentum step. Every lookahead_k fast steps the
// slow weights move alpha of the way toward the fast weights, and the fast
// weights reset onto them.
template <typename T>
class RangerOptimizer {
public:
    RangerOptimizer(std::vector<std::pair<std::string, Mat<T>*>> params,
                    OptimizerOpts opts)
        : params_(std::move(params)), opts_(opts) {
        if (opts_.lookahead_k < 1) throw ConfigError("optimizer: lookahead_k must be >= 1");
        if (!(opts_.lookahead_alpha >= 0.0 && opts_.lookahead_alpha <= 1.0))
            throw ConfigError("optimizer: lookahead_alpha must be in [0,1]");
        for (auto& [name, p] : params_) {
            m_.push_back(Mat<T>::Zero(p->rows(), p->cols()));
            v_.push_back(Mat<T>::Zero(p->rows(), p->cols()));
            slow_.push_back(*p);
        }
    }

    // grads must be ordered exactly like the params handed to the constructor.
    void step(double lr, const std::vector<const Mat<T>*>& grads) {
        if (grads.size() != params_.size())
            throw ShapeError("optimizer: gradient count mismatch");
        ++t_;
        const double b1 = opts_.beta1, b2 = opts_.beta2;
        const double bias1 = 1.0 - std::pow(b1, t_);
        const double bias2 = 1.0 - std::pow(b2, t_);
        const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
        const double rho_t =
            rho_inf - 2.0 * static_cast<double>(t_) * std::pow(b2, t_) / bias2;

        for (size_t i = 0; i < params_.size(); ++i) {
            const Mat<T>& g = *grads[i];
            Mat<T>& p = *params_[i].second;
            if (g.rows() != p.rows() || g.cols() != p.cols())
                throw ShapeError("optimizer: gradient shape mismatch for '" +
                                 params_[i].first + "'");
            if (!all_finite(g))
                throw TrainError("optimizer: non-finite gradient for parameter '" +
                                 params_[i].first + "'");
            m_[i] = T(b1) * m_[i] + T(1.0 - b1) * g;
            v_[i] = T(b2) * v_[i] + T(1.0 - b2) * g.cwiseProduct(g);

            Mat<T> update = m_[i] / T(bias1);
            if (rho_t > 4.0) {
                const double rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                                              ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
                Mat<T> denom = (v_[i] / T(bias2)).cwiseSqrt();
                denom.array() += T(opts_.eps);
                update = T(rect) * update.cwiseQuotient(denom);
            }
            p -= T(lr) * update + T(lr * opts_.weight_decay) * p;
        }

        if (t_ % opts_.lookahead_k == 0) {
            for (size_t i = 0; i < params_.size(); ++i) {
                Mat<T>& p = *params_[i].second;
                slow_[i] += T(opts_.lookahead_alpha) * (p - slow_[i]);
                p = slow_[i];
            }
        }
    }

    std::int64_t steps() const { return t_; }

private:
    std::vector<std::pair<std::string, Mat<T>*>> params_;
    OptimizerOpts opts_;
    std::vector<Mat<T>> m_, v_, slow_;
    std::int64_t t_ = 0;
};

} // namespace stamp
