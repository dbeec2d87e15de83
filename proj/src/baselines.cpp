#include "hottbandit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hottbandit/errors.hpp"

namespace hottbandit {

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, Rng& rng, int max_iterations) {
    const int n = static_cast<int>(X.rows());
    if (k < 1 || n < k) throw ParameterError("kmeans: need 1 <= k <= number of points");
    KMeansResult res;
    res.centroids.resize(k, X.cols());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());

    // k-means++ seeding.
    res.centroids.row(0) = X.row(uniform_index(rng, n));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            dist[i] = std::min(dist[i], (X.row(i) - res.centroids.row(c - 1)).squaredNorm());
            total += dist[i];
        }
        int pick = n - 1;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (int i = 0; i < n; ++i) {
                target -= dist[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_index(rng, n);
        }
        res.centroids.row(c) = X.row(pick);
    }

    res.labels.assign(n, -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = (X.row(i) - res.centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (X.row(i) - res.centroids.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (res.labels[i] != best) {
                res.labels[i] = best;
                changed = true;
            }
        }
        // Reseed empty clusters at the worst-served point.
        std::vector<int> size(k, 0);
        for (int l : res.labels) ++size[l];
        for (int c = 0; c < k; ++c) {
            if (size[c] > 0) continue;
            int far = -1;
            double fd = -1.0;
            for (int i = 0; i < n; ++i) {
                if (size[res.labels[i]] < 2) continue;
                const double d = (X.row(i) - res.centroids.row(res.labels[i])).squaredNorm();
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            if (far < 0) continue;
            --size[res.labels[far]];
            res.labels[far] = c;
            size[c] = 1;
            changed = true;
        }
        res.centroids.setZero();
        for (int i = 0; i < n; ++i) res.centroids.row(res.labels[i]) += X.row(i);
        for (int c = 0; c < k; ++c)
            if (size[c] > 0) res.centroids.row(c) /= size[c];
        double obj = 0.0;
        for (int i = 0; i < n; ++i)
            obj += (X.row(i) - res.centroids.row(res.labels[i])).squaredNorm();
        res.objective.push_back(obj);
        res.iterations = it + 1;
        if (!changed) break;
    }
    return res;
}

ObservationBank::ObservationBank(int users, int items)
    : sum_(Eigen::MatrixXd::Zero(users, items)), count_(Eigen::MatrixXi::Zero(users, items)) {}

void ObservationBank::add(int u, int j, double y) {
    sum_(u, j) += y;
    ++count_(u, j);
}

void ObservationBank::clear() {
    sum_.setZero();
    count_.setZero();
}

AveragedObservations ObservationBank::block(const std::vector<int>& users,
                                            const std::vector<int>& items) const {
    AveragedObservations z;
    z.rows = static_cast<int>(users.size());
    z.cols = static_cast<int>(items.size());
    for (int a = 0; a < z.rows; ++a)
        for (int b = 0; b < z.cols; ++b) {
            const int c = count_(users[a], items[b]);
            if (c > 0) z.entries.push_back({a, b, sum_(users[a], items[b]) / c, c});
        }
    return z;
}

std::vector<int> robust_intersection(const std::vector<std::vector<int>>& sets, int n_items,
                                     double share) {
    std::vector<int> hits(n_items, 0);
    for (const auto& s : sets)
        for (int x : s) ++hits[x];
    const int need = static_cast<int>(std::ceil(share * static_cast<double>(sets.size()) - 1e-12));
    std::vector<int> out;
    for (int x = 0; x < n_items; ++x)
        if (hits[x] > 0 && hits[x] >= need) out.push_back(x);
    return out;
}

namespace {

std::vector<int> iota_vec(int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

Eigen::MatrixXd complete(const AveragedObservations& z, int rank, const OracleConfig& cfg,
                         double sigma, Rng& rng) {
    if (cfg.solver == Solver::nuclear) {
        double lambda = cfg.lambda;
        if (lambda < 0.0) {
            const double d2 = std::max(z.rows, z.cols);
            const double p = static_cast<double>(z.entries.size()) /
                             (static_cast<double>(z.rows) * static_cast<double>(z.cols));
            lambda = cfg.C_lambda * sigma * std::sqrt(d2 * p);
        }
        return complete_nuclear(z, lambda, cfg, rng).Q;
    }
    OracleConfig tuned = cfg;
    tuned.ridge = cfg.ridge_for(sigma);
    return complete_altmin(z, std::max(1, std::min({rank, z.rows, z.cols})), tuned).Q;
}

int argmax_in(const Eigen::MatrixXd& est, int u, const std::vector<int>& items) {
    int best = items.front();
    for (int x : items)
        if (est(u, x) > est(u, best)) best = x;
    return best;
}

std::vector<int> threshold_set(const Eigen::MatrixXd& est, int u, const std::vector<int>& items,
                               double delta) {
    double top = -std::numeric_limits<double>::infinity();
    for (int x : items) top = std::max(top, est(u, x));
    std::vector<int> out;
    for (int x : items)
        if (top - est(u, x) <= delta) out.push_back(x);
    return out;
}

}  // namespace

EtcResult run_etc(Environment& env, const EtcConfig& cfg, Rng& rng) {
    const int M = env.users(), N = env.items();
    const int rank = cfg.oracle.rank > 0 ? cfg.oracle.rank : env.model().rank();
    ObservationBank bank(M, N);
    std::vector<int> play(M);
    for (int t = 0; t < cfg.explore && !env.exhausted(); ++t) {
        for (int u = 0; u < M; ++u) play[u] = uniform_index(rng, N);
        const auto y = env.play(play);
        for (int u = 0; u < M; ++u) bank.add(u, play[u], y[u]);
    }
    const auto users = iota_vec(M), items = iota_vec(N);
    const Eigen::MatrixXd est =
        complete(bank.block(users, items), rank, cfg.oracle, env.model().sigma(), rng);
    EtcResult res;
    res.commit.resize(M);
    for (int u = 0; u < M; ++u) res.commit[u] = argmax_in(est, u, items);
    env.set_phase(1);
    env.finish(res.commit);
    res.trace = env.take_trace();
    return res;
}

RegretTrace run_am(Environment& env, const AmConfig& cfg, Rng& rng) {
    const int M = env.users(), N = env.items();
    const int r = cfg.rank > 0 ? cfg.rank : env.model().rank();
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(M, r), V = Eigen::MatrixXd::Zero(N, r);
    bool ready = false;
    if (cfg.init_users && cfg.init_items) {
        if (cfg.init_users->rows() != M || cfg.init_items->rows() != N ||
            cfg.init_users->cols() != r || cfg.init_items->cols() != r)
            throw ParameterError("run_am: initial factors have the wrong shape");
        U = *cfg.init_users;
        V = *cfg.init_items;
        ready = true;
    }
    struct Obs {
        int other;
        double y;
    };
    std::vector<std::vector<Obs>> by_user(M), by_item(N);
    ObservationBank bank(M, N);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(r, r);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> play(M);
    std::vector<char> touched(N);

    // Ridge step pulled toward the previous factor row.
    auto update = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& fixed,
                      const std::vector<Obs>& obs, int row) {
        Eigen::MatrixXd A = cfg.ridge * I;
        Eigen::VectorXd b = cfg.ridge * target.row(row).transpose();
        for (const auto& o : obs) {
            const auto f = fixed.row(o.other).transpose();
            A.noalias() += f * f.transpose();
            b.noalias() += o.y * f;
        }
        target.row(row) = A.ldlt().solve(b).transpose();
    };

    for (int t = 1; !env.exhausted(); ++t) {
        const double rate = cfg.decay ? cfg.explore / std::sqrt(static_cast<double>(t)) : cfg.explore;
        const Eigen::MatrixXd Q = U * V.transpose();
        for (int u = 0; u < M; ++u) {
            if (!ready || unit(rng) < rate) {
                play[u] = uniform_index(rng, N);
            } else {
                int best = 0;
                for (int j = 1; j < N; ++j)
                    if (Q(u, j) > Q(u, best)) best = j;
                play[u] = best;
            }
        }
        const auto y = env.play(play);
        std::fill(touched.begin(), touched.end(), 0);
        for (int u = 0; u < M; ++u) {
            by_user[u].push_back({play[u], y[u]});
            by_item[play[u]].push_back({u, y[u]});
            bank.add(u, play[u], y[u]);
            touched[play[u]] = 1;
        }
        if (!ready) {
            const auto z = bank.block(iota_vec(M), iota_vec(N));
            const double p_hat = static_cast<double>(z.entries.size()) / (double(M) * N);
            Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(M, N);
            for (const auto& e : z.entries) Y(e.row, e.col) = e.mean / p_hat;
            Eigen::BDCSVD<Eigen::MatrixXd> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const int k = std::min({r, M, N});
            const Eigen::VectorXd root = svd.singularValues().head(k).cwiseSqrt();
            U.leftCols(k) = svd.matrixU().leftCols(k) * root.asDiagonal();
            V.leftCols(k) = svd.matrixV().leftCols(k) * root.asDiagonal();
            ready = true;
            continue;
        }
        for (int u = 0; u < M; ++u) update(U, V, by_user[u], u);
        for (int j = 0; j < N; ++j)
            if (touched[j]) update(V, U, by_item[j], j);
    }
    return env.take_trace();
}

PesResult run_pes(Environment& env, const PesConfig& cfg, Rng& rng) {
    if (cfg.B < 1) throw ParameterError("run_pes: B must be >= 1");
    if (!(cfg.delta > 0.0)) throw ParameterError("run_pes: delta must be > 0");
    const int M = env.users(), N = env.items();
    const int rank = cfg.oracle.rank > 0 ? cfg.oracle.rank : env.model().rank();
    const int k = cfg.clusters > 0 ? cfg.clusters : env.model().rank();
    if (k > M) throw ParameterError("run_pes: more clusters than users");
    const double sigma = env.model().sigma();
    const auto all_users = iota_vec(M), all_items = iota_vec(N);
    PesResult res;

    // Initial exploration and estimate.
    ObservationBank bank(M, N);
    std::vector<int> play(M);
    for (int t = 0; t < cfg.B && !env.exhausted(); ++t) {
        for (int u = 0; u < M; ++u) play[u] = uniform_index(rng, N);
        const auto y = env.play(play);
        for (int u = 0; u < M; ++u) bank.add(u, play[u], y[u]);
    }
    Eigen::MatrixXd est = complete(bank.block(all_users, all_items), rank, cfg.oracle, sigma, rng);

    std::vector<std::vector<int>> cand(M);
    std::vector<char> in_union(N, 0);
    for (int u = 0; u < M; ++u) {
        cand[u] = threshold_set(est, u, all_items, cfg.delta);
        for (int x : cand[u]) in_union[x] = 1;
    }
    std::vector<int> pool;
    for (int x = 0; x < N; ++x)
        if (in_union[x]) pool.push_back(x);
    Eigen::MatrixXd embed(M, static_cast<Eigen::Index>(pool.size()));
    for (std::size_t c = 0; c < pool.size(); ++c)
        embed.col(static_cast<Eigen::Index>(c)) = est.col(pool[c]);
    double best_obj = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < std::max(1, cfg.kmeans_restarts); ++rep) {
        auto km = kmeans(embed, k, rng, cfg.kmeans_iterations);
        if (km.objective.back() < best_obj) {
            best_obj = km.objective.back();
            res.labels = std::move(km.labels);
        }
    }

    std::vector<std::vector<int>> members(k);
    for (int u = 0; u < M; ++u) members[res.labels[u]].push_back(u);
    std::vector<std::vector<int>> active(k);
    auto refresh = [&](int i) {
        std::vector<std::vector<int>> sets;
        for (int u : members[i]) sets.push_back(cand[u]);
        active[i] = robust_intersection(sets, N, cfg.robust_share);
        if (active[i].empty()) {
            ++res.fallbacks;
            active[i] = robust_intersection(sets, N, 0.0);
        }
    };
    for (int i = 0; i < k; ++i)
        if (!members[i].empty()) refresh(i);
    res.active.push_back(active);

    long long B = cfg.B;
    double delta = cfg.delta;
    for (int ell = 1; !env.exhausted(); ++ell) {
        B *= 3;
        delta /= 3.0;
        env.set_phase(ell);
        if (B > env.remaining()) {
            // Not enough rounds for a full phase: exploit within active sets.
            res.exploit_start = env.round();
            for (int u = 0; u < M; ++u) play[u] = argmax_in(est, u, active[res.labels[u]]);
            env.finish(play);
            break;
        }
        bank.clear();
        for (long long t = 0; t < B; ++t) {
            for (int u = 0; u < M; ++u) {
                const auto& a = active[res.labels[u]];
                play[u] = a[uniform_index(rng, static_cast<int>(a.size()))];
            }
            const auto y = env.play(play);
            for (int u = 0; u < M; ++u) bank.add(u, play[u], y[u]);
        }
        for (int i = 0; i < k; ++i) {
            if (members[i].empty()) continue;
            const Eigen::MatrixXd Q =
                complete(bank.block(members[i], active[i]), rank, cfg.oracle, sigma, rng);
            for (std::size_t a = 0; a < members[i].size(); ++a)
                for (std::size_t b = 0; b < active[i].size(); ++b)
                    est(members[i][a], active[i][b]) =
                        Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            for (int u : members[i]) cand[u] = threshold_set(est, u, active[i], delta);
            refresh(i);
        }
        res.active.push_back(active);
        ++res.phases;
    }
    res.trace = env.take_trace();
    return res;
}

}  // namespace hottbandit
