#include "hottbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "hottbandit/errors.hpp"

namespace hottbandit {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1" || text == "yes") return true;
        if (text == "false" || text == "0" || text == "no") return false;
        throw ConfigError(key + ": expected a boolean, got '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return text;
    } else {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw ConfigError(key + ": cannot parse '" + text + "'");
        return value;
    }
}

// Key/value pairs with use tracking so that typos surface as errors.
class Params {
public:
    void set(const std::string& key, const std::string& value, int line = 0) {
        if (values_.count(key))
            throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
        values_[key] = value;
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    template <class T>
    bool get(const std::string& key, T& target) {
        auto v = take(key);
        if (!v) return false;
        target = parse_value<T>(prefix_ + key, *v);
        return true;
    }

    /// Keys under `prefix` with the prefix stripped, marking them used.
    Params sub(const std::string& prefix) {
        Params out;
        out.prefix_ = prefix_ + prefix;
        for (auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0) {
                out.values_[k.substr(prefix.size())] = v;
                used_.insert(k);
            }
        return out;
    }

    void reject_unused() const {
        for (auto& [k, v] : values_)
            if (!used_.count(k)) throw ConfigError("unknown key '" + prefix_ + k + "'");
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
    std::string prefix_;
};

void apply_oracle(OracleConfig& o, Params& p) {
    if (auto v = p.take("oracle.solver")) {
        if (*v == "altmin") o.solver = Solver::altmin;
        else if (*v == "nuclear") o.solver = Solver::nuclear;
        else throw ConfigError("oracle.solver: expected altmin or nuclear, got '" + *v + "'");
    }
    p.get("oracle.p", o.p);
    p.get("oracle.s", o.s);
    p.get("oracle.lambda", o.lambda);
    p.get("oracle.eta", o.eta);
    p.get("oracle.C_p", o.C_p);
    p.get("oracle.c_s", o.c_s);
    p.get("oracle.C_lambda", o.C_lambda);
    p.get("oracle.mu", o.mu);
    p.get("oracle.rank", o.rank);
    p.get("oracle.max_iterations", o.max_iterations);
    p.get("oracle.tolerance", o.tolerance);
    p.get("oracle.ridge", o.ridge);
    p.get("oracle.C_ridge", o.C_ridge);
}

PolicyParams build_params(const std::string& kind, Params& p, const DetElimConfig& det_base = {}) {
    if (kind == "pce") {
        PceConfig c;
        apply_oracle(c.oracle, p);
        p.get("seeds", c.seeds);
        p.get("k0", c.k0);
        p.get("c_mult", c.c_mult);
        p.get("expand_mult", c.expand_mult);
        p.get("max_stage1_phases", c.max_stage1_phases);
        p.get("min_k", c.min_k);
        return c;
    }
    if (kind == "detelim") {
        DetElimConfig c = det_base;
        p.get("delta", c.delta);
        p.get("d_mult", c.d_mult);
        p.get("n_mult", c.n_mult);
        p.get("reps", c.reps);
        p.get("subset_cap", c.subset_cap);
        p.get("check_instant", c.check_instant);
        p.get("enumeration_cap", c.enumeration_cap);
        return c;
    }
    if (kind == "etc") {
        EtcConfig c;
        apply_oracle(c.oracle, p);
        p.get("explore", c.explore);
        return c;
    }
    if (kind == "am") {
        AmConfig c;
        p.get("ridge", c.ridge);
        p.get("explore", c.explore);
        p.get("decay", c.decay);
        p.get("rank", c.rank);
        return c;
    }
    if (kind == "pes") {
        PesSpec s;
        apply_oracle(s.config.oracle, p);
        p.get("B", s.config.B);
        s.absolute_delta = p.get("delta", s.config.delta);
        p.get("delta_scale", s.delta_scale);
        p.get("clusters", s.config.clusters);
        p.get("robust_share", s.config.robust_share);
        p.get("kmeans_iterations", s.config.kmeans_iterations);
        p.get("kmeans_restarts", s.config.kmeans_restarts);
        return s;
    }
    throw ConfigError("unknown policy kind '" + kind + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split_list(text)) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_value<std::uint64_t>("seeds", part));
            continue;
        }
        const auto a = parse_value<std::uint64_t>("seeds", trim(part.substr(0, dots)));
        const auto b = parse_value<std::uint64_t>("seeds", trim(part.substr(dots + 2)));
        if (b < a) throw ConfigError("seeds: empty range '" + part + "'");
        for (auto s = a; s <= b; ++s) out.push_back(s);
    }
    return out;
}

// Keeps every stride-th round and the last one.
std::vector<int> thin(RegretTrace& t, int stride) {
    const int T = t.rounds();
    std::vector<int> rounds;
    if (stride <= 1) {
        rounds.resize(T);
        for (int i = 0; i < T; ++i) rounds[i] = i + 1;
        return rounds;
    }
    RegretTrace kept;
    kept.policy = t.policy;
    kept.seed = t.seed;
    for (int i = 0; i < T; ++i)
        if ((i + 1) % stride == 0 || i + 1 == T) {
            rounds.push_back(i + 1);
            kept.general.push_back(t.general[i]);
            kept.simple.push_back(t.simple[i]);
            kept.phase.push_back(t.phase[i]);
        }
    t = std::move(kept);
    return rounds;
}

template <class Result>
void take_trace(Cell& cell, Result&& r) {
    cell.trace = std::move(r.trace);
    r.trace = RegretTrace{};
    cell.detail = std::forward<Result>(r);
}

void run_cell(Cell& cell, const PolicySpec& policy, const RewardModel& model,
              const ExperimentConfig& config) {
    Environment env(model, cell.seed, config.horizon, policy.name);
    Rng rng = make_rng(cell.seed, "policy/" + policy.name);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, PceConfig>) {
                take_trace(cell, run_pce(env, p, rng));
            } else if constexpr (std::is_same_v<P, DetElimConfig>) {
                take_trace(cell, run_detelim(env, p, rng));
            } else if constexpr (std::is_same_v<P, EtcConfig>) {
                take_trace(cell, run_etc(env, p, rng));
            } else if constexpr (std::is_same_v<P, AmConfig>) {
                cell.trace = run_am(env, p, rng);
            } else {
                PesConfig c = p.config;
                if (!p.absolute_delta) {
                    const double gap = compute_gaps(model, 0).delta;
                    if (!(gap > 0.0))
                        throw ParameterError("pes: instance has no positive gap to scale");
                    c.delta = p.delta_scale * gap;
                }
                take_trace(cell, run_pes(env, c, rng));
            }
        },
        policy.params);
    cell.rounds = thin(cell.trace, config.stride);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PolicySpec make_policy(const std::string& name, const std::string& kind,
                       const std::vector<std::pair<std::string, std::string>>& params) {
    Params p;
    for (auto& [k, v] : params) p.set(k, v);
    PolicySpec spec{name, kind, build_params(kind, p)};
    p.reject_unused();
    return spec;
}

ExperimentConfig parse_config(std::istream& in) {
    Params all;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(n) + ": empty key");
        all.set(key, trim(line.substr(eq + 1)), n);
    }

    ExperimentConfig c;
    all.get("run_id", c.run_id);
    all.get("horizon", c.horizon);
    if (auto v = all.take("seeds")) c.seeds = parse_seeds(*v);
    all.get("out", c.out_dir);
    all.get("threads", c.threads);
    all.get("delta", c.delta);
    all.get("subset_cap", c.subset_cap);
    all.get("enumeration_cap", c.enumeration_cap);
    all.get("csv.stride", c.stride);
    if (auto v = all.take("plot.metric")) {
        if (*v == "simple") c.plot_metric = RegretMode::simple;
        else if (*v == "general") c.plot_metric = RegretMode::general;
        else throw ConfigError("plot.metric: expected simple or general");
    }

    auto& is = c.instance;
    Params inst = all.sub("instance.");
    inst.get("kind", is.kind);
    inst.get("users", is.users);
    inst.get("items", is.items);
    inst.get("rank", is.rank);
    is.override_sigma2 = inst.get("sigma2", is.sigma2);
    inst.get("margin", is.margin);
    if (auto v = inst.take("fill")) {
        if (*v == "face") is.fill = SimplexFill::face;
        else if (*v == "interior") is.fill = SimplexFill::interior;
        else throw ConfigError("instance.fill: expected face or interior");
    }
    inst.get("p", is.p);
    inst.get("eps", is.eps);
    inst.get("replicas", is.replicas);
    inst.get("path", is.path);
    inst.get("rescale", is.rescale);
    inst.reject_unused();

    std::vector<std::string> names;
    if (auto v = all.take("policies")) names = split_list(*v);
    for (const auto& name : names) {
        Params p = all.sub("policy." + name + ".");
        std::string kind = name;
        p.get("kind", kind);
        // Run-level flags reach DeterminantElim unless it overrides them.
        DetElimConfig det;
        det.delta = c.delta;
        det.subset_cap = c.subset_cap;
        det.enumeration_cap = c.enumeration_cap;
        PolicySpec spec{name, kind, build_params(kind, p, det)};
        p.reject_unused();
        c.policies.push_back(std::move(spec));
    }
    all.reject_unused();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

void validate(const ExperimentConfig& c) {
    if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (c.seeds.empty()) throw ConfigError("at least one seed required");
    if (c.stride < 1) throw ConfigError("csv.stride must be >= 1");
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    std::set<std::string> seen;
    for (const auto& p : c.policies)
        if (!seen.insert(p.name).second) throw ConfigError("duplicate policy '" + p.name + "'");
    const auto& k = c.instance.kind;
    if (k != "block" && k != "simplex" && k != "eq7" && k != "file")
        throw ConfigError("instance.kind: unknown generator '" + k + "'");
    if (k == "file" && c.instance.path.empty()) throw ConfigError("instance.path required");
    if (c.instance.sigma2 < 0.0) throw ConfigError("instance.sigma2 must be >= 0");
}

RewardModel make_instance(const InstanceSpec& s, std::uint64_t seed) {
    std::optional<RewardModel> m;
    if (s.kind == "block") {
        m = generate_block_instance(s.users, s.items, s.rank, seed, 0.0);
    } else if (s.kind == "simplex") {
        m = generate_simplex_instance(s.users, s.items, s.rank, seed, s.margin, 0.0, s.fill);
    } else if (s.kind == "eq7") {
        m = eq7_instance(s.p, s.eps, s.replicas, 0.0);
    } else if (s.kind == "file") {
        m = load_instance(s.path);
        if (!s.override_sigma2) return s.rescale ? m->rescaled() : *m;
    } else {
        throw ConfigError("instance.kind: unknown generator '" + s.kind + "'");
    }
    if (s.rescale) m = m->rescaled();
    return m->with_noise(s.sigma2);
}

// ---------------------------------------------------------------------------
// Execution

Cell run_policy(const PolicySpec& policy, const RewardModel& model, std::uint64_t seed,
                int horizon, int stride) {
    ExperimentConfig config;
    config.horizon = horizon;
    config.stride = stride;
    if (horizon < 1) throw ParameterError("run_policy: horizon must be >= 1");
    if (stride < 1) throw ParameterError("run_policy: stride must be >= 1");
    Cell cell;
    cell.policy = policy.name;
    cell.seed = seed;
    const auto c0 = std::chrono::steady_clock::now();
    run_cell(cell, policy, model, config);
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
    return cell;
}

RunResult run_experiment(const ExperimentConfig& config, int threads) {
    validate(config);
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    result.run_id = config.run_id;

    // Instances are built up front so that every policy sees the same one.
    std::vector<std::optional<RewardModel>> models(config.seeds.size());
    std::vector<std::string> model_errors(config.seeds.size());
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
        try {
            models[i] = make_instance(config.instance, config.seeds[i]);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            model_errors[i] = std::string("instance: ") + e.what();
        }
    }

    const std::size_t S = config.seeds.size();
    result.cells.resize(config.policies.size() * S);
    for (std::size_t p = 0; p < config.policies.size(); ++p)
        for (std::size_t i = 0; i < S; ++i) {
            auto& cell = result.cells[p * S + i];
            cell.policy = config.policies[p].name;
            cell.seed = config.seeds[i];
            cell.error = model_errors[i];
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < result.cells.size();) {
            Cell& cell = result.cells[k];
            if (!cell.ok()) continue;
            const auto c0 = std::chrono::steady_clock::now();
            try {
                run_cell(cell, config.policies[k / S], *models[k % S], config);
            } catch (const std::exception& e) {
                cell.error = e.what();
                cell.trace = RegretTrace{};
                cell.rounds.clear();
                cell.detail = std::monostate{};
            }
            cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
        }
    };
    int n = threads > 0 ? threads : std::max(1, config.threads);
    n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), result.cells.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    result.curves = aggregate(result.cells);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::vector<PolicyCurve> aggregate(const std::vector<Cell>& cells) {
    std::vector<PolicyCurve> curves;
    std::map<std::string, std::vector<const Cell*>> groups;
    for (const auto& cell : cells) {
        if (!groups.count(cell.policy)) {
            curves.push_back(PolicyCurve{});
            curves.back().policy = cell.policy;
        }
        auto& g = groups[cell.policy];
        if (cell.ok()) g.push_back(&cell);
    }
    for (auto& curve : curves) {
        const auto& g = groups[curve.policy];
        curve.replicates = static_cast<int>(g.size());
        if (g.empty()) continue;
        curve.rounds = g.front()->rounds;
        for (const Cell* c : g)
            if (c->rounds != curve.rounds)
                throw ContractViolation("aggregate: replicates of '" + curve.policy +
                                        "' disagree on rounds");
        const std::size_t L = curve.rounds.size();
        const double n = static_cast<double>(g.size());
        auto fold = [&](auto column, std::vector<double>& mean, std::vector<double>& se) {
            mean.assign(L, 0.0);
            se.assign(L, 0.0);
            for (std::size_t t = 0; t < L; ++t) {
                double s = 0.0;
                for (const Cell* c : g) s += column(*c)[t];
                mean[t] = s / n;
                if (g.size() < 2) continue;
                double ss = 0.0;
                for (const Cell* c : g) ss += (column(*c)[t] - mean[t]) * (column(*c)[t] - mean[t]);
                se[t] = std::sqrt(ss / (n - 1.0) / n);
            }
        };
        fold([](const Cell& c) -> const std::vector<double>& { return c.trace.general; },
             curve.mean_general, curve.se_general);
        fold([](const Cell& c) -> const std::vector<double>& { return c.trace.simple; },
             curve.mean_simple, curve.se_simple);
    }
    return curves;
}

// ---------------------------------------------------------------------------
// Output

std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

void write_csv(std::ostream& out, const std::string& run_id, const std::vector<Cell>& cells) {
    out << "run_id,policy,seed,round,cum_regret_general,cum_regret_simple,phase\n";
    std::string row;
    for (const auto& cell : cells) {
        if (!cell.ok()) continue;
        const std::string head = run_id + ',' + cell.policy + ',' + std::to_string(cell.seed) + ',';
        for (std::size_t i = 0; i < cell.rounds.size(); ++i) {
            row = head;
            row += std::to_string(cell.rounds[i]);
            row += ',';
            row += format_number(cell.trace.general[i]);
            row += ',';
            row += format_number(cell.trace.simple[i]);
            row += ',';
            row += std::to_string(cell.trace.phase[i]);
            row += '\n';
            out << row;
        }
    }
}

namespace {

std::ofstream open_out(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace

void emit_csv(const RunResult& result, const std::string& path) {
    auto out = open_out(path);
    write_csv(out, result.run_id, result.cells);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<Cell> read_csv(std::istream& in, std::string* run_id) {
    std::string line;
    if (!std::getline(in, line) ||
        line != "run_id,policy,seed,round,cum_regret_general,cum_regret_simple,phase")
        throw ConfigError("csv: missing or unexpected header");
    std::vector<Cell> cells;
    std::string last_run;
    for (int n = 2; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
        if (f.size() != 7) throw ConfigError("csv line " + std::to_string(n) + ": expected 7 fields");
        const auto seed = parse_value<std::uint64_t>("seed", f[2]);
        if (cells.empty() || f[0] != last_run || cells.back().policy != f[1] ||
            cells.back().seed != seed) {
            cells.push_back(Cell{});
            cells.back().policy = f[1];
            cells.back().seed = seed;
            cells.back().trace.policy = f[1];
            cells.back().trace.seed = seed;
            last_run = f[0];
        }
        Cell& c = cells.back();
        c.rounds.push_back(parse_value<int>("round", f[3]));
        c.trace.general.push_back(parse_value<double>("cum_regret_general", f[4]));
        c.trace.simple.push_back(parse_value<double>("cum_regret_simple", f[5]));
        c.trace.phase.push_back(parse_value<int>("phase", f[6]));
    }
    if (run_id) *run_id = last_run;
    return cells;
}

std::vector<Cell> load_csv(const std::string& path, std::string* run_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open csv '" + path + "'");
    return read_csv(in, run_id);
}

namespace {

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93",
                          "#00798c", "#8c564b", "#444444"};

// 1, 2 or 5 times a power of ten, at least span / 5.
double tick_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<PolicyCurve>& curves, RegretMode metric,
               const std::string& title) {
    const double W = 800, H = 500, left = 80, right = 170, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    double xmax = 1.0, ymin = 0.0, ymax = 0.0;
    for (const auto& c : curves) {
        if (c.rounds.empty()) continue;
        const auto& mean = metric == RegretMode::simple ? c.mean_simple : c.mean_general;
        const auto& se = metric == RegretMode::simple ? c.se_simple : c.se_general;
        xmax = std::max(xmax, static_cast<double>(c.rounds.back()));
        for (std::size_t i = 0; i < mean.size(); ++i) {
            ymax = std::max(ymax, mean[i] + se[i]);
            ymin = std::min(ymin, mean[i] - se[i]);
        }
    }
    if (ymax - ymin <= 0.0) ymax = ymin + 1.0;
    const double ystep = tick_step(ymax - ymin);
    ymax = std::ceil(ymax / ystep) * ystep;
    ymin = std::floor(ymin / ystep) * ystep;
    const double xstep = tick_step(xmax);

    auto X = [&](double x) { return left + pw * x / xmax; };
    auto Y = [&](double y) { return top + ph * (1.0 - (y - ymin) / (ymax - ymin)); };
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(6);
        s << v;
        return s.str();
    };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << xml_escape(title) << "</text>\n";

    // Grid and ticks.
    for (double y = ymin; y <= ymax + 1e-9 * ystep; y += ystep) {
        out << "<line x1=\"" << left << "\" y1=\"" << Y(y) << "\" x2=\"" << left + pw << "\" y2=\"" << Y(y)
            << "\" stroke=\"#e5e5e5\"/>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << Y(y) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(y) << "</text>\n";
    }
    for (double x = 0; x <= xmax + 1e-9 * xstep; x += xstep)
        out << "<line x1=\"" << X(x) << "\" y1=\"" << top + ph << "\" x2=\"" << X(x) << "\" y2=\""
            << top + ph + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << X(x) << "\" y=\"" << top + ph + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(x) << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">round</text>\n"
        << "<text x=\"20\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 20 " << top + ph / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">cumulative "
        << (metric == RegretMode::simple ? "simple" : "general") << " regret</text>\n";

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* color = kPalette[k % std::size(kPalette)];
        const double ly = top + 10 + 22.0 * static_cast<double>(k);
        out << "<rect x=\"" << left + pw + 15 << "\" y=\"" << ly - 8 << "\" width=\"14\" height=\"10\" fill=\""
            << color << "\"/>\n"
            << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 1
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(c.policy) << "</text>\n";
        if (c.rounds.empty()) continue;
        const auto& mean = metric == RegretMode::simple ? c.mean_simple : c.mean_general;
        const auto& se = metric == RegretMode::simple ? c.se_simple : c.se_general;
        // At most ~1000 vertices per curve.
        const std::size_t L = c.rounds.size();
        const std::size_t step = std::max<std::size_t>(1, L / 1000);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < L; i += step) idx.push_back(i);
        if (idx.back() != L - 1) idx.push_back(L - 1);

        std::ostringstream band, line;
        band << 'M';
        for (std::size_t i : idx) band << ' ' << X(c.rounds[i]) << ',' << Y(mean[i] + se[i]);
        for (auto it = idx.rbegin(); it != idx.rend(); ++it)
            band << " L " << X(c.rounds[*it]) << ',' << Y(mean[*it] - se[*it]);
        band << " Z";
        line << 'M';
        for (std::size_t n = 0; n < idx.size(); ++n)
            line << (n ? " L " : " ") << X(c.rounds[idx[n]]) << ',' << Y(mean[idx[n]]);
        out << "<path d=\"" << band.str() << "\" fill=\"" << color
            << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
            << "<path d=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\"/>\n";
    }
    out << "</svg>\n";
}

void emit_plot(const RunResult& result, const std::string& path, RegretMode metric) {
    auto out = open_out(path);
    write_svg(out, result.curves, metric, result.run_id);
}

void write_phase_logs(const RunResult& result, const std::string& dir) {
    for (const auto& cell : result.cells) {
        const auto* pce = std::get_if<PceResult>(&cell.detail);
        const auto* det = std::get_if<DetElimResult>(&cell.detail);
        if (!pce && !det) continue;
        auto out = open_out(dir + "/" + cell.policy + "_seed" + std::to_string(cell.seed) + ".tsv");
        if (pce) write_phase_log(out, pce->phases);
        else write_phase_log(out, det->phases);
    }
}

void print_summary(std::ostream& out, const std::vector<PolicyCurve>& curves) {
    out << "policy\treplicates\tfinal_general\tse_general\tfinal_simple\tse_simple\n";
    for (const auto& c : curves) {
        out << c.policy << '\t' << c.replicates;
        if (c.rounds.empty()) {
            out << "\t-\t-\t-\t-\n";
            continue;
        }
        out << '\t' << c.mean_general.back() << '\t' << c.se_general.back() << '\t'
            << c.mean_simple.back() << '\t' << c.se_simple.back() << '\n';
    }
}

}  // namespace hottbandit
