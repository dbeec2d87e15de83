#pragma once

#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "hottbandit/harness.hpp"

namespace hottbandit {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    /// Criteria to run; empty means all ten.
    std::set<int> only;
    int threads = 1;
    /// When set, suites that produce traces leave CSV and SVG files here.
    std::string out_dir;
};

/// The experiment configs behind the trace-producing suites, exposed so the
/// CLI can rerun them by hand.
ExperimentConfig detelim_suite_config();
ExperimentConfig pce_eq7_suite_config();
ExperimentConfig pce_block_suite_config();
ExperimentConfig figure1_suite_config();

/// Runs the selected criteria in order; `report` sees each result as soon as
/// it is known.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& report = {});

/// "PASS  3 eq7-fixture ... (0.01 s)"
std::string format_result(const CriterionResult& r);

}  // namespace hottbandit
