#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "hottbandit/baselines.hpp"
#include "hottbandit/detelim.hpp"
#include "hottbandit/model.hpp"
#include "hottbandit/pce.hpp"

namespace hottbandit {

struct InstanceSpec {
    /// block | simplex | eq7 | file
    std::string kind = "block";
    int users = 200;
    int items = 200;
    int rank = 4;
    double sigma2 = 0.25;
    double margin = 0.2;
    SimplexFill fill = SimplexFill::face;
    double p = 0.5;
    double eps = 0.2;
    int replicas = 1;
    std::string path;
    /// Scale so that max|R| = 1 before noise is applied.
    bool rescale = false;
    /// For file instances: override the stored noise level.
    bool override_sigma2 = false;
};

/// PES with its gap guess either fixed or tied to the instance's true gap.
struct PesSpec {
    PesConfig config;
    bool absolute_delta = false;
    double delta_scale = 0.5;
};

using PolicyParams = std::variant<PceConfig, DetElimConfig, EtcConfig, AmConfig, PesSpec>;

struct PolicySpec {
    std::string name;
    std::string kind;
    PolicyParams params;
};

/// Flat `key = value` file. Grammar:
///
///   line    := blank | '#' comment | key '=' value
///   key     := dotted identifier, e.g. instance.users, policy.etc25.explore
///   lists   := comma separated; seeds also accept an inclusive range a..b
///
/// Top level keys: run_id, horizon, seeds, policies, out, threads, delta,
/// subset_cap, enumeration_cap, csv.stride, plot.metric. Instance keys live
/// under instance.*, policy parameters under policy.<name>.*; a policy's kind
/// defaults to its name. Unknown keys are errors.
struct ExperimentConfig {
    std::string run_id = "run";
    InstanceSpec instance;
    std::vector<PolicySpec> policies;
    int horizon = 300;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "out";
    int threads = 1;
    double delta = 0.1;
    double subset_cap = 1e5;
    double enumeration_cap = 1e6;
    /// Keep every stride-th round (and always the last) in stored traces.
    int stride = 1;
    RegretMode plot_metric = RegretMode::simple;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Throws ConfigError on broken invariants.
void validate(const ExperimentConfig& config);

/// Builds a policy entry from `kind` and `key=value` parameter strings.
PolicySpec make_policy(const std::string& name, const std::string& kind,
                       const std::vector<std::pair<std::string, std::string>>& params = {});

RewardModel make_instance(const InstanceSpec& spec, std::uint64_t seed);

using CellDetail = std::variant<std::monostate, PceResult, DetElimResult, EtcResult, PesResult>;

/// One (policy, seed) replicate. `rounds` are the 1-based rounds kept in
/// `trace` after thinning.
struct Cell {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<int> rounds;
    RegretTrace trace;
    std::string error;
    double seconds = 0.0;
    /// Policy diagnostics with their trace moved out.
    CellDetail detail;

    bool ok() const { return error.empty(); }
};

struct PolicyCurve {
    std::string policy;
    int replicates = 0;
    std::vector<int> rounds;
    std::vector<double> mean_general, se_general;
    std::vector<double> mean_simple, se_simple;
};

struct RunResult {
    std::string run_id;
    std::vector<Cell> cells;
    std::vector<PolicyCurve> curves;
    double seconds = 0.0;
};

/// A single replicate of `policy` on `model`. Throws instead of recording
/// the error.
Cell run_policy(const PolicySpec& policy, const RewardModel& model, std::uint64_t seed,
                int horizon, int stride = 1);

/// Every (policy, seed) pair, concurrently up to `threads` (0 = config value).
/// Output does not depend on the thread count.
RunResult run_experiment(const ExperimentConfig& config, int threads = 0);

/// Mean and standard error per policy over the successful cells, in order of
/// first appearance.
std::vector<PolicyCurve> aggregate(const std::vector<Cell>& cells);

void write_csv(std::ostream& out, const std::string& run_id, const std::vector<Cell>& cells);
void emit_csv(const RunResult& result, const std::string& path);
/// Cells in file order; run_id of the last row goes to `run_id` if given.
std::vector<Cell> read_csv(std::istream& in, std::string* run_id = nullptr);
std::vector<Cell> load_csv(const std::string& path, std::string* run_id = nullptr);

void write_svg(std::ostream& out, const std::vector<PolicyCurve>& curves, RegretMode metric,
               const std::string& title);
void emit_plot(const RunResult& result, const std::string& path, RegretMode metric);

/// One TSV per PCE or DeterminantElim cell under `dir`.
void write_phase_logs(const RunResult& result, const std::string& dir);

void print_summary(std::ostream& out, const std::vector<PolicyCurve>& curves);

/// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace hottbandit
