#include "hottbandit/matcomp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "hottbandit/errors.hpp"

namespace hottbandit {

std::size_t SampleMask::size() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.size();
    return n;
}

SampleMask plan_mask(const std::vector<int>& users, const std::vector<int>& items, double p,
                     Rng& rng, int s) {
    if (users.empty() || items.empty()) throw ParameterError("plan_mask: empty user or item set");
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError("plan_mask: p must lie in (0, 1]");
    if (s < 1) throw ParameterError("plan_mask: s must be >= 1");
    SampleMask mask;
    mask.users = users;
    mask.items = items;
    mask.s = s;
    mask.rows.resize(users.size());
    const int n = static_cast<int>(items.size());
    std::bernoulli_distribution coin(p);
    for (auto& row : mask.rows) {
        if (p >= 1.0) {
            row.resize(n);
            std::iota(row.begin(), row.end(), 0);
        } else {
            for (int j = 0; j < n; ++j)
                if (coin(rng)) row.push_back(j);
        }
        if (row.empty()) row.push_back(uniform_index(rng, n));
        mask.b = std::max(mask.b, static_cast<int>(row.size()));
    }
    mask.m = static_cast<std::int64_t>(mask.b) * s;
    return mask;
}

Collected collect(Environment& env, const SampleMask& mask, int s, const OffPolicy& off_policy,
                  Rng& rng) {
    if (s < 1) throw ParameterError("collect: s must be >= 1");
    const int M = env.users();
    const int n_items = static_cast<int>(mask.items.size());
    std::vector<int> local(M, -1);
    for (std::size_t i = 0; i < mask.users.size(); ++i) local[mask.users[i]] = static_cast<int>(i);

    // Membership bitmap per row for padding draws.
    std::vector<std::vector<char>> in_row(mask.rows.size(), std::vector<char>(n_items, 0));
    std::vector<std::vector<std::size_t>> slot(mask.rows.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < mask.rows.size(); ++i) {
        slot[i].resize(mask.rows[i].size());
        for (std::size_t k = 0; k < mask.rows[i].size(); ++k) {
            in_row[i][mask.rows[i][k]] = 1;
            slot[i][k] = total++;
        }
    }
    std::vector<double> sums(total, 0.0);
    std::vector<int> counts(total, 0);

    Collected out;
    std::vector<int> play(M);
    for (int block = 0; block < s && out.complete; ++block) {
        for (int step = 0; step < mask.b; ++step) {
            if (env.exhausted()) {
                out.complete = false;
                break;
            }
            for (int u = 0; u < M; ++u) {
                const int i = local[u];
                if (i < 0) {
                    const int j = off_policy ? off_policy(u) : -1;
                    if (j < 0) throw ContractViolation("collect: off-policy slate is empty");
                    play[u] = j;
                } else if (step < static_cast<int>(mask.rows[i].size())) {
                    play[u] = mask.items[mask.rows[i][step]];
                } else {
                    int j;
                    do j = uniform_index(rng, n_items);
                    while (in_row[i][j]);
                    play[u] = mask.items[j];
                }
            }
            const auto obs = env.play(play);
            ++out.rounds_used;
            for (std::size_t i = 0; i < mask.rows.size(); ++i) {
                if (step >= static_cast<int>(mask.rows[i].size())) continue;
                const std::size_t k = slot[i][step];
                sums[k] += obs[mask.users[i]];
                ++counts[k];
            }
        }
    }

    out.z.rows = static_cast<int>(mask.users.size());
    out.z.cols = n_items;
    for (std::size_t i = 0; i < mask.rows.size(); ++i)
        for (std::size_t k = 0; k < mask.rows[i].size(); ++k) {
            const std::size_t id = slot[i][k];
            if (counts[id] > 0)
                out.z.entries.push_back({static_cast<int>(i), mask.rows[i][k],
                                         sums[id] / counts[id], counts[id]});
        }
    return out;
}

Eigen::MatrixXd soft_threshold_svd(const Eigen::MatrixXd& X, double tau) {
    if (X.size() == 0) return X;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = (svd.singularValues().array() - tau).max(0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

namespace {

double nuclear_norm(const Eigen::MatrixXd& X) {
    if (X.size() == 0) return 0.0;
    return Eigen::BDCSVD<Eigen::MatrixXd>(X).singularValues().sum();
}

struct BlockResult {
    bool converged = false;
    int iterations = 0;
};

// Monotone FISTA with unit step on 0.5||P(X - Z)||^2 + lambda ||X||_*. The
// smooth part has Lipschitz constant 1; a prox point is only accepted when it
// does not raise the objective, so the iterates' objective never increases.
BlockResult ista(const AveragedObservations& z, double lambda, const OracleConfig& config,
                 Eigen::MatrixXd& X, std::vector<double>* objective) {
    X.setZero(z.rows, z.cols);
    Eigen::MatrixXd Y = X, G(z.rows, z.cols);
    double t = 1.0;
    double f = nuclear_objective(z, X, lambda);
    BlockResult res;
    if (objective) objective->push_back(f);
    for (int it = 0; it < config.max_iterations; ++it) {
        G = Y;
        for (const auto& e : z.entries) G(e.row, e.col) -= Y(e.row, e.col) - e.mean;
        Eigen::MatrixXd P = soft_threshold_svd(G, lambda);
        const double fp = nuclear_objective(z, P, lambda);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        Eigen::MatrixXd next = fp <= f ? P : X;
        Y = next + (t / t_next) * (P - next) + ((t - 1.0) / t_next) * (next - X);
        const double change = (P - X).norm();
        X = std::move(next);
        f = std::min(f, fp);
        t = t_next;
        res.iterations = it + 1;
        if (objective) objective->push_back(f);
        if (change <= config.tolerance) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace

double nuclear_objective(const AveragedObservations& z, const Eigen::MatrixXd& Q, double lambda) {
    double loss = 0.0;
    for (const auto& e : z.entries) {
        const double d = Q(e.row, e.col) - e.mean;
        loss += d * d;
    }
    return 0.5 * loss + lambda * nuclear_norm(Q);
}

Completion complete_nuclear(const AveragedObservations& z, double lambda,
                            const OracleConfig& config, Rng& rng, std::vector<double>* objective) {
    if (!(lambda >= 0.0)) throw ParameterError("complete_nuclear: lambda must be >= 0");
    Completion out;
    out.Q.setZero(z.rows, z.cols);
    if (z.rows == 0 || z.cols == 0) {
        out.converged = true;
        return out;
    }
    const bool split_cols = z.cols >= z.rows;
    const int longer = split_cols ? z.cols : z.rows;
    const int shorter = split_cols ? z.rows : z.cols;
    const int k = (longer + shorter - 1) / shorter;

    std::vector<int> perm(longer);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<int>> blocks(k);
    for (int i = 0; i < longer; ++i) blocks[i % k].push_back(perm[i]);

    std::vector<int> block_of(longer), pos(longer);
    for (int b = 0; b < k; ++b) {
        std::sort(blocks[b].begin(), blocks[b].end());
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            block_of[blocks[b][i]] = b;
            pos[blocks[b][i]] = static_cast<int>(i);
        }
    }
    std::vector<AveragedObservations> sub(k);
    for (int b = 0; b < k; ++b) {
        const int w = static_cast<int>(blocks[b].size());
        sub[b].rows = split_cols ? z.rows : w;
        sub[b].cols = split_cols ? w : z.cols;
    }
    for (const auto& e : z.entries) {
        const int key = split_cols ? e.col : e.row;
        ObservedEntry le = e;
        (split_cols ? le.col : le.row) = pos[key];
        sub[block_of[key]].entries.push_back(le);
    }

    out.converged = true;
    for (int b = 0; b < k; ++b) {
        Eigen::MatrixXd X;
        const auto r = ista(sub[b], lambda, config, X, b == 0 ? objective : nullptr);
        out.converged = out.converged && r.converged;
        out.iterations = std::max(out.iterations, r.iterations);
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            if (split_cols)
                out.Q.col(blocks[b][i]) = X.col(static_cast<Eigen::Index>(i));
            else
                out.Q.row(blocks[b][i]) = X.row(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

Completion complete_altmin(const AveragedObservations& z, int rank, const OracleConfig& config) {
    if (rank < 1) throw ParameterError("complete_altmin: rank must be >= 1");
    Completion out;
    out.Q.setZero(z.rows, z.cols);
    if (z.rows == 0 || z.cols == 0 || z.entries.empty()) {
        out.converged = true;
        return out;
    }
    const int r = std::min({rank, z.rows, z.cols});
    const double ridge = std::max(config.ridge, 1e-8);

    const double p_hat = static_cast<double>(z.entries.size()) /
                         (static_cast<double>(z.rows) * static_cast<double>(z.cols));
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(z.rows, z.cols);
    for (const auto& e : z.entries) Y(e.row, e.col) = e.mean / p_hat;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd root = svd.singularValues().head(r).cwiseSqrt();
    Eigen::MatrixXd X = svd.matrixU().leftCols(r) * root.asDiagonal();
    Eigen::MatrixXd W = svd.matrixV().leftCols(r) * root.asDiagonal();

    std::vector<std::vector<int>> by_row(z.rows), by_col(z.cols);
    for (std::size_t k = 0; k < z.entries.size(); ++k) {
        by_row[z.entries[k].row].push_back(static_cast<int>(k));
        by_col[z.entries[k].col].push_back(static_cast<int>(k));
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(r, r);
    auto solve_side = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& fixed,
                          const std::vector<std::vector<int>>& lists, bool rows) {
        Eigen::MatrixXd A(r, r);
        Eigen::VectorXd rhs(r);
        for (std::size_t i = 0; i < lists.size(); ++i) {
            A = ridge * I;
            rhs.setZero();
            for (int k : lists[i]) {
                const auto& e = z.entries[k];
                const auto f = fixed.row(rows ? e.col : e.row).transpose();
                A.noalias() += f * f.transpose();
                rhs.noalias() += e.mean * f;
            }
            target.row(static_cast<Eigen::Index>(i)) = A.ldlt().solve(rhs).transpose();
        }
    };

    Eigen::MatrixXd prev = X * W.transpose();
    for (int it = 0; it < config.max_iterations; ++it) {
        solve_side(X, W, by_row, true);
        solve_side(W, X, by_col, false);
        Eigen::MatrixXd Q = X * W.transpose();
        const double change = (Q - prev).norm();
        const double scale = std::max(1.0, prev.norm());
        prev = std::move(Q);
        out.iterations = it + 1;
        if (change <= config.tolerance * scale) {
            out.converged = true;
            break;
        }
    }
    out.Q = std::move(prev);
    return out;
}

OracleSchedule oracle_schedule(int n_users, int n_items, double eta, double sigma, int rank,
                               const OracleConfig& config) {
    if (!(eta > 0.0)) throw ParameterError("oracle schedule: eta must be > 0");
    const double d2 = std::max(n_users, n_items);
    const double log_d2 = std::max(1.0, std::log(d2));
    OracleSchedule s;
    s.p = config.p > 0.0
              ? std::min(1.0, config.p)
              : std::min(1.0, config.C_p * config.mu * config.mu * std::pow(log_d2, 3) / d2);
    if (config.s > 0) {
        s.s = config.s;
    } else {
        const double root = config.c_s * sigma * rank / (eta * log_d2);
        const double want = std::ceil(root * root - 1e-9);
        s.s = want >= max_repeats ? max_repeats : std::max(1, static_cast<int>(want));
    }
    s.lambda = config.lambda >= 0.0 ? config.lambda : config.C_lambda * sigma * std::sqrt(d2 * s.p);
    return s;
}

EstimatePlan plan_estimate(const std::vector<int>& users, const std::vector<int>& items,
                           double eta, double sigma, int rank, const OracleConfig& config,
                           Rng& rng) {
    EstimatePlan plan;
    plan.rank = rank;
    plan.schedule = oracle_schedule(static_cast<int>(users.size()), static_cast<int>(items.size()),
                                    eta, sigma, rank, config);
    plan.mask = plan_mask(users, items, plan.schedule.p, rng, plan.schedule.s);
    return plan;
}

Estimate run_estimate(Environment& env, const EstimatePlan& plan, const OracleConfig& config,
                      const OffPolicy& off_policy, Rng& rng) {
    Estimate est;
    est.users = plan.mask.users;
    est.items = plan.mask.items;
    est.schedule = plan.schedule;
    const auto got = collect(env, plan.mask, plan.schedule.s, off_policy, rng);
    est.rounds_used = got.rounds_used;
    est.partial = !got.complete;
    OracleConfig tuned = config;
    // Entries are means of s draws.
    tuned.ridge = config.ridge_for(env.model().sigma() / std::sqrt(static_cast<double>(plan.mask.s)));
    Completion c = config.solver == Solver::nuclear
                       ? complete_nuclear(got.z, plan.schedule.lambda, config, rng)
                       : complete_altmin(got.z, plan.rank, tuned);
    est.Q = std::move(c.Q);
    est.converged = c.converged;
    return est;
}

Estimate estimate_simple(Environment& env, const std::vector<int>& users,
                         const std::vector<int>& items, double eta, const OracleConfig& config,
                         const OffPolicy& off_policy, Rng& rng) {
    const int rank = config.rank > 0 ? config.rank : env.model().rank();
    const auto plan = plan_estimate(users, items, eta, env.model().sigma(), rank, config, rng);
    return run_estimate(env, plan, config, off_policy, rng);
}

void write_observations(std::ostream& out, const AveragedObservations& z,
                        const SampleMask& mask) {
    std::ostringstream line;
    line.precision(17);
    for (const auto& e : z.entries) {
        line.str({});
        line << mask.users[e.row] << ' ' << mask.items[e.col] << ' ' << e.mean << ' ' << e.count
             << '\n';
        out << line.str();
    }
}

AveragedObservations read_observations(std::istream& in, const SampleMask& mask) {
    std::unordered_map<int, int> row_of, col_of;
    for (std::size_t i = 0; i < mask.users.size(); ++i) row_of[mask.users[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < mask.items.size(); ++j) col_of[mask.items[j]] = static_cast<int>(j);
    AveragedObservations z;
    z.rows = static_cast<int>(mask.users.size());
    z.cols = static_cast<int>(mask.items.size());
    std::string text;
    int lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.empty()) continue;
        std::istringstream ss(text);
        int u, j, count;
        double mean;
        if (!(ss >> u >> j >> mean >> count))
            throw ParameterError("observation dump: malformed line " + std::to_string(lineno));
        auto ru = row_of.find(u);
        auto cj = col_of.find(j);
        if (ru == row_of.end() || cj == col_of.end())
            throw ParameterError("observation dump: entry outside mask at line " +
                                 std::to_string(lineno));
        z.entries.push_back({ru->second, cj->second, mean, count});
    }
    return z;
}

}  // namespace hottbandit
