#pragma once

#include <span>

#include "stamp/linalg.hpp"

namespace stamp {

// Probabilities below this floor are clamped before the log.
inline constexpr double kProbFloor = 1e-12;

// -log(probs[label]) with the probability floored at kProbFloor.
double cross_entropy(std::span<const double> probs, int label);

// Mean over ordered row pairs i != j of relu(cosine(H_i, H_j)). Rows with
// zero norm have cosine 0 against anything. A single-row input returns 0 and
// sets *single_row_warning when provided (the pair set is empty).
template <typename T>
double similarity_loss(const Mat<T>& H, bool* single_row_warning = nullptr);

// lambda * ce + (1 - lambda) * sim; lambda must be in [0,1].
double total_loss(double ce, double sim, double lambda);

} // namespace stamp
