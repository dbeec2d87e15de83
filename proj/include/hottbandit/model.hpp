#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hottbandit/rng.hpp"

namespace hottbandit {

using Slate = std::vector<int>;

/// Ground truth R = U V^T with hott set A. Immutable after construction.
class RewardModel {
public:
    RewardModel(Eigen::MatrixXd U, Eigen::MatrixXd V, std::vector<int> hott,
                double sigma2, bool unnormalized = false);

    int users() const { return static_cast<int>(U_.rows()); }
    int items() const { return static_cast<int>(V_.rows()); }
    int rank() const { return static_cast<int>(U_.cols()); }

    const Eigen::MatrixXd& U() const { return U_; }
    const Eigen::MatrixXd& V() const { return V_; }
    const Eigen::MatrixXd& rewards() const { return R_; }
    const std::vector<int>& hott() const { return hott_; }
    double reward(int u, int item) const { return R_(u, item); }
    double sigma2() const { return sigma2_; }
    double sigma() const;
    bool unnormalized() const { return unnormalized_; }

    /// R[u, pi_u(1)].
    double best_reward(int u) const { return best_[u]; }

    /// Copy with V scaled so that max|R| = 1; clears the unnormalized flag.
    RewardModel rescaled() const;
    RewardModel with_noise(double sigma2) const;

    bool operator==(const RewardModel&) const = default;

private:
    Eigen::MatrixXd U_, V_, R_;
    std::vector<int> hott_;
    double sigma2_;
    bool unnormalized_;
    std::vector<double> best_;
};

/// One-hot users at (u mod r), trimmed-Gaussian items, last r items 2*alpha*I.
RewardModel generate_block_instance(int M, int N, int r, std::uint64_t seed,
                                    double sigma2 = 0.0);

/// Where non-hott items sit inside conv(V_A u {0}): on the far face
/// (weights sum to one) or anywhere in the simplex.
enum class SimplexFill { face, interior };

/// Nonnegative instance: users uniform on the simplex, planted hott rows near
/// (1 - margin) e_j, other items lambda * V_A.
RewardModel generate_simplex_instance(int M, int N, int r, std::uint64_t seed,
                                      double planted_margin, double sigma2 = 0.0,
                                      SimplexFill fill = SimplexFill::face);

/// The 3x3 example matrix [[1,0,1/3],[0,1,2/3],[p,p-eps,p-2eps/3]] with each
/// row replicated `replicas` times (user u takes base row u mod 3).
RewardModel eq7_instance(double p = 0.5, double eps = 0.2, int replicas = 1,
                         double sigma2 = 0.0);

double observe(const RewardModel& model, int u, int item, Rng& rng);

struct GapReport {
    double delta = 0.0;
    double delta_hott = 0.0;
    /// NaN when C(N, r) exceeds the enumeration cap.
    double delta_det = 0.0;
    double kappa = 0.0;
    std::vector<int> cluster_sizes;
    /// Per hott item; -1 for an empty cluster.
    std::vector<int> opinionated_users;
    /// Some user's top two items tie.
    bool degenerate = false;
};

GapReport compute_gaps(const RewardModel& model, double enumeration_cap = 1e6);

struct HullCheck {
    bool ok = true;
    int first_infeasible = -1;
    /// Per item: lambda with V_i = sum_j lambda_j V_{A_j}; empty if infeasible.
    std::vector<Eigen::VectorXd> witness;
};

/// Linear feasibility of V_i in conv(V_A u {0}) per item, tolerance 1e-9.
HullCheck verify_hott(const RewardModel& model, double tol = 1e-9);

/// Solves lambda >= 0, sum lambda <= 1, basis^T lambda = v. Rows of `basis`
/// are the hull vertices.
std::optional<Eigen::VectorXd> hull_coefficients(const Eigen::MatrixXd& basis,
                                                 const Eigen::VectorXd& v,
                                                 double tol = 1e-9);

struct BestWorst {
    int best;
    int worst;
};

/// Row argmax / argmin with lowest-index tie breaking.
std::vector<BestWorst> best_worst_items(const RewardModel& model);
int row_argmax(const Eigen::MatrixXd& m, int row, std::span<const int> columns);

/// det^2 of the rows of `m` listed in `rows`.
double det2_rows(const Eigen::MatrixXd& m, std::span<const int> rows);

enum class RegretMode { general, simple };

struct RegretTrace {
    std::string policy;
    std::uint64_t seed = 0;
    /// Cumulative per-round values, one entry per round.
    std::vector<double> general;
    std::vector<double> simple;
    std::vector<int> phase;

    int rounds() const { return static_cast<int>(simple.size()); }
    bool operator==(const RegretTrace&) const = default;
};

/// Per-round increment. General mode requires single-item slates.
double regret_increment(const RewardModel& model, std::span<const Slate> recs,
                        RegretMode mode);

/// Per-user-averaged increments of one round.
struct RoundRegret {
    double general = 0.0;
    double simple = 0.0;
};

RoundRegret round_regret(const RewardModel& model, std::span<const Slate> recs);
void append_round(RegretTrace& trace, const RoundRegret& step, int phase = 0);

/// Appends one round to both cumulative sequences. For slates longer than one
/// item the general column charges the mean per-item gap.
void regret_step(RegretTrace& trace, const RewardModel& model,
                 std::span<const Slate> recs, int phase = 0);

void write_instance(std::ostream& out, const RewardModel& model);
RewardModel read_instance(std::istream& in);
void save_instance(const std::string& path, const RewardModel& model);
RewardModel load_instance(const std::string& path);

}  // namespace hottbandit
