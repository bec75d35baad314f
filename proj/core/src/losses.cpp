#include "stamp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stamp/errors.hpp"

namespace stamp {

double cross_entropy(std::span<const double> probs, int label) {
    if (label != 0 && label != 1) throw ValueError("cross_entropy: label must be 0 or 1");
    if (probs.size() < 2) throw ValueError("cross_entropy: need two class probabilities");
    return -std::log(std::max(probs[static_cast<size_t>(label)], kProbFloor));
}

template <typename T>
double similarity_loss(const Mat<T>& H, bool* single_row_warning) {
    const Eigen::Index m = H.rows();
    if (m < 1) throw ValueError("similarity_loss: H has no rows");
    if (m == 1) {
        if (single_row_warning) *single_row_warning = true;
        return 0.0;
    }
    // Sequential scalar arithmetic, so the value is exactly the ordered-pair
    // enumeration of the definition (no vectorized re-association).
    const Mat<double> x = H.template cast<double>();
    std::vector<double> norms(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < x.cols(); ++k) sq += x(i, k) * x(i, k);
        norms[static_cast<size_t>(i)] = std::sqrt(sq);
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const double denom =
                norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)];
            double c = 0.0;
            if (denom > 0.0) {
                double dot = 0.0;
                for (Eigen::Index k = 0; k < x.cols(); ++k) dot += x(i, k) * x(j, k);
                c = dot / denom;
            }
            if (c > 0.0) sum += c;
        }
    return sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

template double similarity_loss<float>(const Mat<float>&, bool*);
template double similarity_loss<double>(const Mat<double>&, bool*);

double total_loss(double ce, double sim, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValueError("total_loss: lambda must be in [0,1]");
    return lambda * ce + (1.0 - lambda) * sim;
}

} // namespace stamp
