#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hottbandit/combinatorics.hpp"
#include "hottbandit/environment.hpp"

namespace hottbandit {

/// C(r) = 2^{r+1} r^{1 + r/2}.
double c_of_r(int r);

struct RequiredD {
    int d = 1;
    /// False when no d < N satisfies the inequality; d is then N - 1.
    bool feasible = true;
};

/// Smallest d with d / (N - d) >= ((12 ln(1/delta) + r ln N + 2n) / M)^{1/r}.
RequiredD required_d(double n_target, double delta, int N, int M, int r);

/// Surviving r-columns, each an ascending r-tuple.
struct ColumnFamily {
    int r = 1;
    std::vector<std::vector<int>> columns;

    std::size_t size() const { return columns.size(); }
    /// Sorted union of all columns.
    std::vector<int> items() const;
    static ColumnFamily all(int N, int r);
};

struct SampledItems {
    /// Per user, ascending.
    std::vector<std::vector<int>> sets;
    /// Users covering each column (H_J), ascending.
    std::vector<std::vector<int>> coverage;
    bool clamped = false;
};

SampledItems sample_items(const ColumnFamily& family, int M, int d, Rng& rng);

/// Split-sample means over the sampled entries; NaN elsewhere.
struct SplitEstimates {
    Eigen::MatrixXd first;
    Eigen::MatrixXd second;
};

struct PhaseRun {
    SplitEstimates split;
    std::int64_t rounds_used = 0;
};

/// Greedy cover of `items` by columns of the family, as column indices: each
/// step takes the column through the lowest uncovered item that covers most.
std::vector<int> cover_cycle(const ColumnFamily& family, const std::vector<int>& items);

/// Plays each user's cover cycle 2 * reps times. Observations of sampled
/// items go to the first half until reps are stored, then to the second.
/// `filler` is the column index played by users whose schedule ran out.
PhaseRun run_phase_recommendations(Environment& env, const ColumnFamily& family,
                                   const SampledItems& sampled, int reps, int filler);

struct MuValue {
    double value = 0.0;
    /// Standard error of the Monte Carlo average; 0 when exact.
    double se = 0.0;
    bool exact = true;
};

/// Average of det^2(R[I, J]) over r-subsets I of the users.
MuValue mu_exact(const Eigen::MatrixXd& R, std::span<const int> J, double subset_cap = 1e5,
                 std::uint64_t seed = 0);

/// Average of det(R1[I, J]) det(R2[I, J]) over r-subsets I of `users`.
/// Every determinant is checked against the Hadamard bound.
MuValue mu_hat(const SplitEstimates& split, std::span<const int> users, std::span<const int> J,
               double subset_cap, Rng& rng, HadamardGuard* guard = nullptr);

/// Indices of columns with estimate >= max - 2 eps. NaN estimates (too few
/// covering users) are kept and ignored for the maximum.
std::vector<int> eliminate(const std::vector<double>& estimates, double eps);

/// 6 r^{5/2} (det^2 V_A - det^2 V_J) / det^2 V_A.
double instant_bound(const Eigen::MatrixXd& V, std::span<const int> A, std::span<const int> J);

struct DetElimConfig {
    double delta = 0.1;
    /// Multipliers on the hidden constants of d_1 and n_l.
    double d_mult = 0.125;
    double n_mult = 0.01;
    /// Per-half repeat count; 0 derives max(1, ceil(sigma^2 log(MNT))).
    int reps = 0;
    double subset_cap = 1e5;
    /// Check the instantaneous-regret bound for every played (user, slate).
    bool check_instant = false;
    double enumeration_cap = 1e6;
};

struct DetPhaseRecord {
    int ell = 0;
    int d = 0;
    std::int64_t d_nominal = 0;
    int reps = 0;
    double n_target = 0.0;
    double eps = 0.0;
    int family_size = 0;
    int min_coverage = 0;
    double mean_coverage = 0.0;
    std::int64_t start_round = 0;
    std::int64_t rounds = 0;
    bool hott_survived = true;
    bool argmax_survived = true;
};

struct DetElimResult {
    RegretTrace trace;
    std::vector<DetPhaseRecord> phases;
    ColumnFamily final_family;
    std::vector<int> exploit_slate;
    bool hott_survived = true;
    bool argmax_survived = true;
    bool d_clamped = false;
    std::int64_t exploit_start = -1;
    HadamardGuard guard;
    /// Played (user, slate) pairs whose regret exceeded instant_bound.
    std::int64_t instant_checks = 0;
    std::int64_t instant_violations = 0;
};

DetElimResult run_detelim(Environment& env, const DetElimConfig& config, Rng& rng);

void write_phase_log(std::ostream& out, const std::vector<DetPhaseRecord>& phases);

}  // namespace hottbandit
