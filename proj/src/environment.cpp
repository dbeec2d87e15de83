#include "hottbandit/environment.hpp"

#include "hottbandit/errors.hpp"

namespace hottbandit {

Environment::Environment(const RewardModel& model, std::uint64_t seed, int horizon,
                         std::string policy)
    : model_(&model), noise_(make_rng(seed, "noise/" + policy)), horizon_(horizon) {
    if (horizon < 0) throw ParameterError("Environment: negative horizon");
    trace_.policy = std::move(policy);
    trace_.seed = seed;
    trace_.general.reserve(horizon);
    trace_.simple.reserve(horizon);
    trace_.phase.reserve(horizon);
    singles_.assign(model.users(), Slate(1));
}

std::vector<double> Environment::play(std::span<const int> items) {
    if (static_cast<int>(items.size()) != users())
        throw ContractViolation("Environment::play: one item per user required");
    for (int u = 0; u < users(); ++u) singles_[u][0] = items[u];
    std::vector<double> out;
    play(singles_, out);
    return out;
}

void Environment::play(std::span<const Slate> slates, std::vector<double>& out) {
    if (exhausted()) throw ContractViolation("Environment::play: horizon exhausted");
    regret_step(trace_, *model_, slates, phase_);
    out.clear();
    const double sigma = model_->sigma();
    for (int u = 0; u < users(); ++u)
        for (int j : slates[u]) {
            const double mean = model_->reward(u, j);
            out.push_back(sigma == 0.0 ? mean : mean + sigma * gauss_(noise_));
        }
    ++round_;
}

void Environment::finish(std::span<const Slate> slates) {
    if (exhausted()) return;
    const RoundRegret step = round_regret(*model_, slates);
    for (; round_ < horizon_; ++round_) append_round(trace_, step, phase_);
}

void Environment::finish(std::span<const int> items) {
    if (static_cast<int>(items.size()) != users())
        throw ContractViolation("Environment::finish: one item per user required");
    for (int u = 0; u < users(); ++u) singles_[u][0] = items[u];
    finish(singles_);
}

}  // namespace hottbandit
