#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hottbandit/rng.hpp"

namespace hottbandit {

/// C(n, k) as a double; exact for the sizes used here (< 2^53).
double binomial(int n, int k);

/// Calls `visit` with every ascending k-subset of {0..n-1} in lexicographic
/// order. Stops early when `visit` returns false. Returns the visit count.
std::int64_t for_each_combination(int n, int k,
                                  const std::function<bool(std::span<const int>)>& visit);

/// Uniform k-subset of {0..n-1}, ascending.
std::vector<int> sample_combination(int n, int k, Rng& rng);

/// Determinant of a small square matrix (closed form up to 3x3).
double small_determinant(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Checks |det| <= a^r r^(r/2) with a the largest absolute entry
/// (Hadamard's inequality). Counts checks and violations.
struct HadamardGuard {
    std::int64_t checks = 0;
    std::int64_t trips = 0;

    void check(const Eigen::Ref<const Eigen::MatrixXd>& m, double det);
    void merge(const HadamardGuard& other) {
        checks += other.checks;
        trips += other.trips;
    }
};

}  // namespace hottbandit
