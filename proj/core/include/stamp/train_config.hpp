#pragma once

#include <cstdint>

#include "stamp/errors.hpp"

namespace stamp {

// Training hyperparameters. Batch size is fixed at one bag per step.
struct TrainConfig {
    int epochs = 50;
    double lr0 = 1e-4;
    double lr_min = 5e-6;
    double weight_decay = 1e-5;
    double lambda = 0.9; // cross-entropy weight in the total loss
    std::uint64_t seed = 0;
    int lookahead_k = 6;
    double lookahead_alpha = 0.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool class_weighted = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (!(lambda >= 0.0 && lambda <= 1.0))
            throw ConfigError("train: lambda must be in [0,1]");
        if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be > 0");
        if (!(lr_min >= 0.0) || lr_min > lr0)
            throw ConfigError("train: need 0 <= lr_min <= lr0");
        if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
        if (lookahead_k < 1) throw ConfigError("train: lookahead_k must be >= 1");
        if (!(lookahead_alpha >= 0.0 && lookahead_alpha <= 1.0))
            throw ConfigError("train: lookahead_alpha must be in [0,1]");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("train: betas must be in [0,1)");
        if (!(eps > 0.0)) throw ConfigError("train: eps must be > 0");
    }
};

} // namespace stamp
