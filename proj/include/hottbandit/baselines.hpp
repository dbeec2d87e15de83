#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "hottbandit/environment.hpp"
#include "hottbandit/matcomp.hpp"

namespace hottbandit {

struct KMeansResult {
    std::vector<int> labels;
    /// k x dim.
    Eigen::MatrixXd centroids;
    /// Sum of squared distances after each Lloyd iteration.
    std::vector<double> objective;
    int iterations = 0;
};

/// Lloyd's algorithm from a k-means++ start. Empty clusters are reseeded at
/// the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, Rng& rng, int max_iterations = 50);

/// Running sums of noisy feedback per (user, item).
class ObservationBank {
public:
    ObservationBank(int users, int items);
    void add(int u, int j, double y);
    void clear();
    /// Means over the block users x items, in local coordinates.
    AveragedObservations block(const std::vector<int>& users, const std::vector<int>& items) const;
    int count(int u, int j) const { return count_(u, j); }

private:
    Eigen::MatrixXd sum_;
    Eigen::MatrixXi count_;
};

/// Items in at least ceil(share * |sets|) of the sets, ascending.
std::vector<int> robust_intersection(const std::vector<std::vector<int>>& sets, int n_items,
                                     double share = 0.7);

struct EtcConfig {
    int explore = 25;
    OracleConfig oracle;
};

struct EtcResult {
    RegretTrace trace;
    std::vector<int> commit;
};

EtcResult run_etc(Environment& env, const EtcConfig& config, Rng& rng);

struct AmConfig {
    double ridge = 0.1;
    double explore = 0.05;
    /// Exploration rate decays as explore / sqrt(t).
    bool decay = true;
    /// 0 means the environment's rank.
    int rank = 0;
    /// Starting factors (users x rank, items x rank); spectral otherwise.
    std::optional<Eigen::MatrixXd> init_users;
    std::optional<Eigen::MatrixXd> init_items;
};

RegretTrace run_am(Environment& env, const AmConfig& config, Rng& rng);

struct PesConfig {
    int B = 25;
    /// Gap guess; must be positive.
    double delta = 0.1;
    /// Cluster count; 0 means the environment's rank.
    int clusters = 0;
    double robust_share = 0.7;
    int kmeans_iterations = 50;
    /// Independent k-means++ starts; the lowest final objective wins.
    int kmeans_restarts = 10;
    OracleConfig oracle;
};

struct PesResult {
    RegretTrace trace;
    std::vector<int> labels;
    /// Active item set per cluster, one entry per completed phase (index 0 is
    /// the set after the first clustering).
    std::vector<std::vector<std::vector<int>>> active;
    int fallbacks = 0;
    int phases = 0;
    std::int64_t exploit_start = -1;
};

PesResult run_pes(Environment& env, const PesConfig& config, Rng& rng);

}  // namespace hottbandit
