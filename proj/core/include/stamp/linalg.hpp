#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace stamp {

// All dense math runs on row-major Eigen matrices; rows are instances/tokens.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatF = Mat<float>;
using MatD = Mat<double>;

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent substreams from one seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Gaussian init. Draws are made in double regardless of T so that a seed
// produces the same parameter values (up to rounding) at every precision.
template <typename T>
Mat<T> randn(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat<T> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = static_cast<T>(dist(rng));
    return m;
}

template <typename T>
bool all_finite(const Mat<T>& m) {
    return m.allFinite();
}

template <typename T>
Mat<T> to_mat(const MatF& m) {
    return m.template cast<T>();
}

} // namespace stamp
