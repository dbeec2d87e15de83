#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hottbandit/model.hpp"
#include "hottbandit/rng.hpp"

namespace hottbandit {

/// The simulated world seen by a policy: noisy feedback, a round clock capped
/// at the horizon, and the regret trace accrued against ground truth.
/// Owns its noise stream; the model must outlive it.
class Environment {
public:
    Environment(const RewardModel& model, std::uint64_t seed, int horizon,
                std::string policy = {});

    const RewardModel& model() const { return *model_; }
    int users() const { return model_->users(); }
    int items() const { return model_->items(); }
    int horizon() const { return horizon_; }
    int round() const { return round_; }
    int remaining() const { return horizon_ - round_; }
    bool exhausted() const { return round_ >= horizon_; }

    void set_phase(int phase) { phase_ = phase; }
    int phase() const { return phase_; }

    /// One round, one item per user. Returns the M noisy rewards.
    std::vector<double> play(std::span<const int> items);

    /// One round with per-user slates. `out` receives the rewards flattened in
    /// slate order.
    void play(std::span<const Slate> slates, std::vector<double>& out);

    /// Repeats the same recommendation until the horizon without drawing
    /// feedback. For exploitation tails whose rewards nobody reads.
    void finish(std::span<const Slate> slates);
    void finish(std::span<const int> items);

    const RegretTrace& trace() const { return trace_; }
    RegretTrace take_trace() { return std::move(trace_); }

private:
    const RewardModel* model_;
    Rng noise_;
    std::normal_distribution<double> gauss_;
    int horizon_;
    int round_ = 0;
    int phase_ = 0;
    RegretTrace trace_;
    std::vector<Slate> singles_;
};

}  // namespace hottbandit
