#pragma once

#include <cmath>
#include <cstdint>

#include "stamp/errors.hpp"

namespace stamp {

// Cosine annealing from lr0 down to lr_min over total_steps. The endpoints
// are returned exactly; total_steps == 0 degenerates to lr0.
inline double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0,
                        double lr_min) {
    if (step < 0 || (total_steps > 0 && step > total_steps))
        throw ValueError("cosine_lr: step must be in [0, total_steps]");
    if (total_steps <= 0) return lr0;
    if (step == 0) return lr0;
    if (step == total_steps) return lr_min;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(M_PI * t));
}

} // namespace stamp
