#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stamp/model.hpp"

namespace stamp {

// Desk-size configuration small enough for finite differences to stay fast.
inline ModelConfig tiny_model_config() {
    ModelConfig c;
    c.input_dim = 8;
    c.hidden_dim = 16;
    c.patterns = 2;
    c.attn_dim = 8;
    c.heads = 8;
    return c;
}

struct GradCheckOptions {
    ModelConfig model = tiny_model_config();
    std::string model_kind = "stamp"; // stamp, maxpool, meanpool, abmil
    int instances = 6;
    int label = 1;
    double lambda = 0.9; // forced to 1 for baselines
    double fd_step = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 42;
};

struct GradCheckEntry {
    std::string tensor;
    Eigen::Index rows = 0, cols = 0;
    double max_rel_err = 0;
};

struct GradCheckReport {
    double tolerance = 0;
    double fd_step = 0;
    bool passed = false;
    double seconds = 0;
    std::vector<GradCheckEntry> entries; // one per parameter tensor

    double max_rel_err() const {
        double m = 0;
        for (const auto& e : entries) m = std::max(m, e.max_rel_err);
        return m;
    }
};

// Compares the analytic gradient of the total loss against central finite
// differences, entry by entry, at 64-bit precision. The relative error uses
// max(|analytic|, |numeric|, 1e-6) as denominator so that near-zero gradients
// are judged on the finite-difference noise floor.
GradCheckReport gradient_check(const GradCheckOptions& opts = {});

} // namespace stamp
