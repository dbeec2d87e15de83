#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hottbandit/environment.hpp"
#include "hottbandit/matcomp.hpp"

namespace hottbandit {

/// Per-user candidate item sets, each sorted ascending.
using ItemSets = std::vector<std::vector<int>>;

/// Users joined iff their candidate sets intersect.
class UserGraph {
public:
    UserGraph() = default;
    explicit UserGraph(int n, bool complete = false);
    static UserGraph from_sets(const ItemSets& sets, int n_items);

    int size() const { return n_; }
    bool adjacent(int u, int v) const { return adj_[static_cast<std::size_t>(u) * n_ + v] != 0; }
    void connect(int u, int v);
    std::vector<int> neighbors(int u) const;

private:
    int n_ = 0;
    std::vector<char> adj_;
};

/// First pairwise non-adjacent d-subset in lexicographic order.
std::optional<std::vector<int>> check_independent_set(const UserGraph& g, int d);

/// Keep items within c of the estimated best of each set. `estimates` must
/// cover every item of every set.
std::vector<int> prune_items(const std::vector<int>& set, const double* row_estimates, double c);
ItemSets prune_items(const ItemSets& sets, const Eigen::MatrixXd& estimates, double c);

struct ExpandResult {
    ItemSets sets;
    int expanded = 0;
    /// Users whose expansion came out empty and kept their old set.
    int empty_fallbacks = 0;
};

/// Users adjacent to more than one seed get every group item within
/// 12 * k_prev of their estimated best.
ExpandResult expand_item_sets(const UserGraph& g, const std::vector<int>& seeds, double k_prev,
                              const Eigen::MatrixXd& estimates, const ItemSets& group_sets,
                              const ItemSets& sets, double mult = 12.0);

struct Groups {
    /// Common item set T_C per seed.
    ItemSets items;
    /// Users whose set meets T_C per seed.
    std::vector<std::vector<int>> users;
    int empty_fallbacks = 0;
};

Groups form_groups(const UserGraph& g, const std::vector<int>& seeds, const ItemSets& sets);

struct PceConfig {
    OracleConfig oracle;
    /// Independent-set size; 0 means the rank.
    int seeds = 0;
    double k0 = 1.0;
    double c_mult = 3.0;
    double expand_mult = 12.0;
    /// Stage-1 phases before giving up and exploiting.
    int max_stage1_phases = 64;
    /// Floor on the accuracy requested from the oracle.
    double min_k = 1e-12;
};

struct PhaseRecord {
    int ell = 0;
    int stage = 1;
    double k = 0.0;
    std::int64_t start_round = 0;
    std::int64_t rounds = 0;
    std::vector<int> seeds;
    std::vector<int> set_sizes;
    std::vector<int> group_sizes;
    /// Max |estimate - R| over the entries estimated this phase.
    double oracle_error = 0.0;
    /// Largest true gap of a surviving item over all users, after pruning and
    /// after expansion.
    double worst_gap_pruned = 0.0;
    double worst_gap = 0.0;
    bool best_survived = true;
};

struct PceResult {
    RegretTrace trace;
    std::vector<PhaseRecord> phases;
    std::vector<int> seeds;
    int ell0 = -1;
    bool stage1_incomplete = false;
    bool best_survived = true;
    int empty_intersections = 0;
    int empty_expansions = 0;
    std::int64_t exploit_start = -1;
    ItemSets final_sets;
};

PceResult run_pce(Environment& env, const PceConfig& config, Rng& rng);

void write_phase_log(std::ostream& out, const std::vector<PhaseRecord>& phases);

}  // namespace hottbandit
