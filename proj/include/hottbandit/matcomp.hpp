#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "hottbandit/environment.hpp"
#include "hottbandit/rng.hpp"

namespace hottbandit {

enum class Solver { nuclear, altmin };

/// Knobs of the matrix-completion oracle. p, s and lambda are derived from
/// the accuracy target unless overridden with a positive (lambda: >= 0) value.
struct OracleConfig {
    double p = 0.0;
    int s = 0;
    double lambda = -1.0;
    double eta = 0.1;
    double C_p = 4.0;
    double c_s = 2.0;
    double C_lambda = 2.0;
    /// Incoherence surrogate feeding the p schedule.
    double mu = 2.0;
    Solver solver = Solver::altmin;
    /// Target rank for altmin; 0 means the environment's rank.
    int rank = 0;
    int max_iterations = 300;
    double tolerance = 1e-10;
    double ridge = 1e-8;
    /// Altmin ridge grows with the noise: max(ridge, C_ridge * sigma^2).
    double C_ridge = 2.0;

    double ridge_for(double sigma) const { return std::max(ridge, C_ridge * sigma * sigma); }
};

/// Omega over U x V. Rows are indexed by position in `users`, entries of
/// `rows[i]` by position in `items` (ascending).
struct SampleMask {
    std::vector<int> users;
    std::vector<int> items;
    std::vector<std::vector<int>> rows;
    int b = 0;
    int s = 1;
    std::int64_t m = 0;

    std::size_t size() const;
};

struct ObservedEntry {
    int row;
    int col;
    double mean;
    int count;
};

/// Sparse per-entry means over a rows x cols block (local indices).
struct AveragedObservations {
    int rows = 0;
    int cols = 0;
    std::vector<ObservedEntry> entries;
};

SampleMask plan_mask(const std::vector<int>& users, const std::vector<int>& items, double p,
                     Rng& rng, int s = 1);

/// Item for a user outside the sampled set; must return a valid item.
using OffPolicy = std::function<int(int user)>;

struct Collected {
    AveragedObservations z;
    int rounds_used = 0;
    /// False when the horizon ran out before all b*s rounds.
    bool complete = true;
};

Collected collect(Environment& env, const SampleMask& mask, int s, const OffPolicy& off_policy,
                  Rng& rng);

struct Completion {
    Eigen::MatrixXd Q;
    bool converged = false;
    int iterations = 0;
};

/// U S V^T -> U max(S - tau, 0) V^T.
Eigen::MatrixXd soft_threshold_svd(const Eigen::MatrixXd& X, double tau);

/// 0.5 * sum over observed (Q - Z)^2 + lambda * ||Q||_*.
double nuclear_objective(const AveragedObservations& z, const Eigen::MatrixXd& Q, double lambda);

/// Proximal descent with singular-value soft-thresholding, solved
/// independently on balanced random blocks of the longer side. When
/// `objective` is given it receives the per-iteration objective of the first
/// block.
Completion complete_nuclear(const AveragedObservations& z, double lambda,
                            const OracleConfig& config, Rng& rng,
                            std::vector<double>* objective = nullptr);

/// Spectral initialization followed by alternating ridge least squares.
Completion complete_altmin(const AveragedObservations& z, int rank, const OracleConfig& config);

/// s is clamped to max_repeats so tiny eta never overflows the round count.
inline constexpr int max_repeats = 100'000'000;

struct OracleSchedule {
    double p = 1.0;
    int s = 1;
    double lambda = 0.0;
};

OracleSchedule oracle_schedule(int n_users, int n_items, double eta, double sigma, int rank,
                               const OracleConfig& config);

struct EstimatePlan {
    OracleSchedule schedule;
    SampleMask mask;
    int rank = 1;
};

EstimatePlan plan_estimate(const std::vector<int>& users, const std::vector<int>& items,
                           double eta, double sigma, int rank, const OracleConfig& config,
                           Rng& rng);

struct Estimate {
    /// users.size() x items.size(), in the order of the plan's sets.
    Eigen::MatrixXd Q;
    std::vector<int> users;
    std::vector<int> items;
    int rounds_used = 0;
    bool partial = false;
    bool converged = false;
    OracleSchedule schedule;
};

Estimate run_estimate(Environment& env, const EstimatePlan& plan, const OracleConfig& config,
                      const OffPolicy& off_policy, Rng& rng);

/// Plan, collect and complete in one call.
Estimate estimate_simple(Environment& env, const std::vector<int>& users,
                         const std::vector<int>& items, double eta, const OracleConfig& config,
                         const OffPolicy& off_policy, Rng& rng);

/// "u j mean count" per line with global indices.
void write_observations(std::ostream& out, const AveragedObservations& z,
                        const SampleMask& mask);
/// Reads a dump back into local coordinates of `mask`.
AveragedObservations read_observations(std::istream& in, const SampleMask& mask);

}  // namespace hottbandit
