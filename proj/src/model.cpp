#include "hottbandit/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hottbandit/combinatorics.hpp"
#include "hottbandit/errors.hpp"

namespace hottbandit {

RewardModel::RewardModel(Eigen::MatrixXd U, Eigen::MatrixXd V, std::vector<int> hott,
                         double sigma2, bool unnormalized)
    : U_(std::move(U)), V_(std::move(V)), hott_(std::move(hott)), sigma2_(sigma2),
      unnormalized_(unnormalized) {
    if (U_.rows() < 1 || V_.rows() < 1 || U_.cols() < 1)
        throw ParameterError("RewardModel: empty factor");
    if (U_.cols() != V_.cols())
        throw ParameterError("RewardModel: U and V rank differ");
    if (static_cast<Eigen::Index>(hott_.size()) != U_.cols())
        throw ParameterError("RewardModel: |A| must equal r");
    for (std::size_t i = 0; i < hott_.size(); ++i) {
        if (hott_[i] < 0 || hott_[i] >= V_.rows())
            throw ParameterError("RewardModel: hott index out of range");
        if (i > 0 && hott_[i] <= hott_[i - 1])
            throw ParameterError("RewardModel: hott indices must be strictly ascending");
    }
    if (!(sigma2_ >= 0.0)) throw ParameterError("RewardModel: sigma2 must be >= 0");
    R_ = U_ * V_.transpose();
    best_.resize(U_.rows());
    for (int u = 0; u < users(); ++u) best_[u] = R_.row(u).maxCoeff();
}

double RewardModel::sigma() const { return std::sqrt(sigma2_); }

RewardModel RewardModel::rescaled() const {
    const double peak = R_.cwiseAbs().maxCoeff();
    if (peak == 0.0) return RewardModel(U_, V_, hott_, sigma2_, false);
    return RewardModel(U_, V_ / peak, hott_, sigma2_, false);
}

RewardModel RewardModel::with_noise(double sigma2) const {
    return RewardModel(U_, V_, hott_, sigma2, unnormalized_);
}

namespace {

// Uniform point of S_r = {x >= 0, |x|_1 <= 1}: first r coordinates of a
// flat Dirichlet on r + 1 coordinates.
Eigen::VectorXd uniform_simplex_point(int r, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd w(r + 1);
    for (int i = 0; i <= r; ++i) w[i] = expo(rng);
    w /= w.sum();
    return w.head(r);
}

// Uniform point of the face {x >= 0, |x|_1 = 1}.
Eigen::VectorXd uniform_face_point(int r, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd w(r);
    for (int i = 0; i < r; ++i) w[i] = expo(rng);
    return w / w.sum();
}

}  // namespace

RewardModel generate_block_instance(int M, int N, int r, std::uint64_t seed, double sigma2) {
    if (r < 1 || M < r || N < 2 * r)
        throw ParameterError("generate_block_instance: need M >= r >= 1 and N >= 2r");
    Rng rng = make_rng(seed, "instance/block");
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(N, r);
    double alpha = 0.0;
    for (int attempt = 0; attempt < 100 && alpha <= 0.0; ++attempt) {
        for (int i = 0; i < N - r; ++i)
            for (int c = 0; c < r; ++c) V(i, c) = std::max(0.0, normal(rng));
        alpha = V.topRows(N - r).maxCoeff();
    }
    if (alpha <= 0.0) throw GenerationError("generate_block_instance: all entries trimmed");

    for (int i = 0; i < N - r; ++i) {
        const double l1 = V.row(i).sum();
        if (l1 > 2.0 * alpha) V.row(i) *= 2.0 * alpha / l1;
    }
    for (int j = 0; j < r; ++j) V(N - r + j, j) = 2.0 * alpha;

    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(M, r);
    for (int u = 0; u < M; ++u) U(u, u % r) = 1.0;

    std::vector<int> hott(r);
    std::iota(hott.begin(), hott.end(), N - r);
    const bool unnormalized = 2.0 * alpha > 1.0;
    return RewardModel(std::move(U), std::move(V), std::move(hott), sigma2, unnormalized);
}

RewardModel generate_simplex_instance(int M, int N, int r, std::uint64_t seed,
                                      double planted_margin, double sigma2, SimplexFill fill) {
    if (r < 1 || M < 1 || N <= r)
        throw ParameterError("generate_simplex_instance: need M >= 1, N > r >= 1");
    if (!(planted_margin > 0.0 && planted_margin < 1.0))
        throw ParameterError("generate_simplex_instance: planted_margin must be in (0, 1)");
    Rng rng = make_rng(seed, "instance/simplex");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool enumerate = binomial(N, r) <= 1e5;

    for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::MatrixXd U(M, r);
        for (int u = 0; u < M; ++u) U.row(u) = uniform_simplex_point(r, rng).transpose();

        std::vector<int> hott = sample_combination(N, r, rng);
        Eigen::MatrixXd VA(r, r);
        for (int j = 0; j < r; ++j) {
            VA.row(j) = 0.25 * planted_margin * uniform_simplex_point(r, rng).transpose();
            VA(j, j) += 1.0 - planted_margin;
        }
        Eigen::MatrixXd V(N, r);
        int next_hott = 0;
        for (int i = 0; i < N; ++i) {
            if (next_hott < r && hott[next_hott] == i) {
                V.row(i) = VA.row(next_hott++);
                continue;
            }
            // r = 1 has a single-point face, so draw a strict shrink instead.
            Eigen::VectorXd lambda = fill == SimplexFill::interior ? uniform_simplex_point(r, rng)
                                     : r == 1 ? Eigen::VectorXd::Constant(1, unit(rng))
                                              : uniform_face_point(r, rng);
            V.row(i) = lambda.transpose() * VA;
        }

        if (enumerate) {
            const double best = det2_rows(V, hott);
            bool strict = true;
            for_each_combination(N, r, [&](std::span<const int> J) {
                if (std::equal(J.begin(), J.end(), hott.begin())) return true;
                if (det2_rows(V, J) >= best) strict = false;
                return strict;
            });
            if (!strict) continue;
        }
        return RewardModel(std::move(U), std::move(V), std::move(hott), sigma2, false);
    }
    throw GenerationError("generate_simplex_instance: no strictly maximal hott determinant");
}

RewardModel eq7_instance(double p, double eps, int replicas, double sigma2) {
    if (replicas < 1) throw ParameterError("eq7_instance: replicas must be >= 1");
    const int M = 3 * replicas;
    Eigen::MatrixXd base(3, 2);
    base << 1.0, 0.0, 0.0, 1.0, p, p - eps;
    Eigen::MatrixXd U(M, 2);
    for (int u = 0; u < M; ++u) U.row(u) = base.row(u % 3);
    Eigen::MatrixXd V(3, 2);
    V << 1.0, 0.0, 0.0, 1.0, 1.0 / 3.0, 2.0 / 3.0;
    return RewardModel(std::move(U), std::move(V), {0, 1}, sigma2, false);
}

double observe(const RewardModel& model, int u, int item, Rng& rng) {
    const double mean = model.reward(u, item);
    if (model.sigma2() == 0.0) return mean;
    return mean + std::normal_distribution<double>(0.0, model.sigma())(rng);
}

double det2_rows(const Eigen::MatrixXd& m, std::span<const int> rows) {
    const int r = static_cast<int>(rows.size());
    Eigen::MatrixXd sub(r, m.cols());
    for (int i = 0; i < r; ++i) sub.row(i) = m.row(rows[i]);
    const double d = small_determinant(sub);
    return d * d;
}

int row_argmax(const Eigen::MatrixXd& m, int row, std::span<const int> columns) {
    int best = -1;
    for (int j : columns)
        if (best < 0 || m(row, j) > m(row, best)) best = j;
    return best;
}

GapReport compute_gaps(const RewardModel& model, double enumeration_cap) {
    const int M = model.users(), N = model.items(), r = model.rank();
    const auto& R = model.rewards();
    const auto& A = model.hott();
    GapReport g;
    g.cluster_sizes.assign(r, 0);
    g.opinionated_users.assign(r, -1);
    std::vector<double> best_gap(r, -std::numeric_limits<double>::infinity());

    g.delta = std::numeric_limits<double>::infinity();
    for (int u = 0; u < M; ++u) {
        int first = 0;
        for (int j = 1; j < N; ++j)
            if (R(u, j) > R(u, first)) first = j;
        int second = -1;
        for (int j = 0; j < N; ++j)
            if (j != first && (second < 0 || R(u, j) > R(u, second))) second = j;
        const double gap = second < 0 ? 0.0 : R(u, first) - R(u, second);
        if (gap == 0.0) g.degenerate = true;
        g.delta = std::min(g.delta, gap);

        double other_hott = -std::numeric_limits<double>::infinity();
        for (int a : A)
            if (a != first) other_hott = std::max(other_hott, R(u, a));
        const double hott_gap = R(u, first) - other_hott;

        auto it = std::find(A.begin(), A.end(), first);
        if (it == A.end()) continue;
        const int cluster = static_cast<int>(it - A.begin());
        ++g.cluster_sizes[cluster];
        if (hott_gap > best_gap[cluster]) {
            best_gap[cluster] = hott_gap;
            g.opinionated_users[cluster] = u;
        }
    }
    if (g.degenerate) g.delta = 0.0;

    g.delta_hott = std::numeric_limits<double>::infinity();
    int smallest = M;
    for (int i = 0; i < r; ++i) {
        smallest = std::min(smallest, g.cluster_sizes[i]);
        if (g.cluster_sizes[i] > 0) g.delta_hott = std::min(g.delta_hott, best_gap[i]);
    }
    if (std::all_of(g.cluster_sizes.begin(), g.cluster_sizes.end(),
                    [](int s) { return s == 0; }))
        g.delta_hott = 0.0;
    g.kappa = static_cast<double>(smallest) * r / M;

    if (binomial(N, r) <= enumeration_cap) {
        const double top = det2_rows(model.V(), A);
        double runner_up = -std::numeric_limits<double>::infinity();
        for_each_combination(N, r, [&](std::span<const int> J) {
            if (!std::equal(J.begin(), J.end(), A.begin()))
                runner_up = std::max(runner_up, det2_rows(model.V(), J));
            return true;
        });
        g.delta_det = std::isinf(runner_up) ? top : top - runner_up;
    } else {
        g.delta_det = std::numeric_limits<double>::quiet_NaN();
    }
    return g;
}

std::optional<Eigen::VectorXd> hull_coefficients(const Eigen::MatrixXd& basis,
                                                 const Eigen::VectorXd& v, double tol) {
    const int k = static_cast<int>(basis.rows());
    const int dim = static_cast<int>(basis.cols());
    // Some basic feasible solution of {B^T l = v, l >= 0, sum l <= 1} has a
    // support S with either the sum constraint slack (B_S independent) or
    // tight; trying both systems over every support is therefore complete.
    std::vector<int> order(1 << k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [](int a, int b) {
        return __builtin_popcount(a) < __builtin_popcount(b);
    });
    for (int mask : order) {
        std::vector<int> support;
        for (int j = 0; j < k; ++j)
            if (mask & (1 << j)) support.push_back(j);
        const int s = static_cast<int>(support.size());
        for (int tight = 0; tight < 2; ++tight) {
            Eigen::VectorXd lambda_s;
            if (s == 0) {
                if (tight) continue;
                lambda_s.resize(0);
            } else {
                Eigen::MatrixXd A(dim + tight, s);
                Eigen::VectorXd b(dim + tight);
                for (int c = 0; c < s; ++c) A.col(c).head(dim) = basis.row(support[c]).transpose();
                b.head(dim) = v;
                if (tight) {
                    A.row(dim).setOnes();
                    b[dim] = 1.0;
                }
                lambda_s = A.completeOrthogonalDecomposition().solve(b);
            }
            Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
            for (int c = 0; c < s; ++c) lambda[support[c]] = lambda_s[c];
            const double residual = (basis.transpose() * lambda - v).cwiseAbs().maxCoeff();
            if (residual <= tol && (k == 0 || lambda.minCoeff() >= -tol) &&
                lambda.sum() <= 1.0 + tol)
                return lambda.cwiseMax(0.0);
        }
    }
    return std::nullopt;
}

HullCheck verify_hott(const RewardModel& model, double tol) {
    const int N = model.items(), r = model.rank();
    const auto& A = model.hott();
    Eigen::MatrixXd VA(r, r);
    for (int j = 0; j < r; ++j) VA.row(j) = model.V().row(A[j]);

    HullCheck check;
    check.witness.resize(N);
    for (int i = 0; i < N; ++i) {
        auto pos = std::find(A.begin(), A.end(), i);
        if (pos != A.end()) {
            check.witness[i] = Eigen::VectorXd::Unit(r, static_cast<int>(pos - A.begin()));
            continue;
        }
        auto lambda = hull_coefficients(VA, model.V().row(i).transpose(), tol);
        if (!lambda) {
            check.ok = false;
            check.first_infeasible = i;
            return check;
        }
        check.witness[i] = *lambda;
    }
    return check;
}

std::vector<BestWorst> best_worst_items(const RewardModel& model) {
    const auto& R = model.rewards();
    std::vector<BestWorst> out(model.users());
    for (int u = 0; u < model.users(); ++u) {
        int best = 0, worst = 0;
        for (int j = 1; j < model.items(); ++j) {
            if (R(u, j) > R(u, best)) best = j;
            if (R(u, j) < R(u, worst)) worst = j;
        }
        out[u] = {best, worst};
    }
    return out;
}

namespace {

void check_slate(const Slate& slate, int N) {
    if (slate.empty()) throw ContractViolation("regret: empty slate");
    for (std::size_t i = 0; i < slate.size(); ++i) {
        if (slate[i] < 0 || slate[i] >= N) throw ContractViolation("regret: item out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (slate[i] == slate[j]) throw ContractViolation("regret: duplicate item in slate");
    }
}

}  // namespace

double regret_increment(const RewardModel& model, std::span<const Slate> recs, RegretMode mode) {
    const int M = model.users();
    if (static_cast<int>(recs.size()) != M)
        throw ContractViolation("regret: one slate per user required");
    double total = 0.0;
    for (int u = 0; u < M; ++u) {
        check_slate(recs[u], model.items());
        if (mode == RegretMode::general) {
            if (recs[u].size() != 1)
                throw ContractViolation("regret: general mode takes one item per user");
            total += model.best_reward(u) - model.reward(u, recs[u][0]);
        } else {
            double got = -std::numeric_limits<double>::infinity();
            for (int j : recs[u]) got = std::max(got, model.reward(u, j));
            total += model.best_reward(u) - got;
        }
    }
    return total / M;
}

RoundRegret round_regret(const RewardModel& model, std::span<const Slate> recs) {
    const int M = model.users();
    if (static_cast<int>(recs.size()) != M)
        throw ContractViolation("regret: one slate per user required");
    double general = 0.0, simple = 0.0;
    for (int u = 0; u < M; ++u) {
        check_slate(recs[u], model.items());
        double got = -std::numeric_limits<double>::infinity();
        double mean_gap = 0.0;
        for (int j : recs[u]) {
            const double value = model.reward(u, j);
            got = std::max(got, value);
            mean_gap += model.best_reward(u) - value;
        }
        general += mean_gap / static_cast<double>(recs[u].size());
        simple += model.best_reward(u) - got;
    }
    return {general / M, simple / M};
}

void append_round(RegretTrace& trace, const RoundRegret& step, int phase) {
    const double prev_g = trace.general.empty() ? 0.0 : trace.general.back();
    const double prev_s = trace.simple.empty() ? 0.0 : trace.simple.back();
    trace.general.push_back(prev_g + step.general);
    trace.simple.push_back(prev_s + step.simple);
    trace.phase.push_back(phase);
}

void regret_step(RegretTrace& trace, const RewardModel& model, std::span<const Slate> recs,
                 int phase) {
    append_round(trace, round_regret(model, recs), phase);
}

namespace {

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double parse_double(const std::string& token) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ParameterError("instance: bad number '" + token + "'");
    return x;
}

void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word)
        throw ParameterError("instance: expected '" + word + "', got '" + got + "'");
}

}  // namespace

void write_instance(std::ostream& out, const RewardModel& model) {
    out << "hottbandit-instance 1\n";
    out << "M " << model.users() << "\nN " << model.items() << "\nr " << model.rank() << "\n";
    out << "sigma2 " << format_double(model.sigma2()) << "\n";
    out << "unnormalized " << (model.unnormalized() ? 1 : 0) << "\n";
    out << "hott";
    for (int a : model.hott()) out << ' ' << a;
    out << "\n";
    auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
        out << name << "\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                out << (j ? " " : "") << format_double(m(i, j));
            out << "\n";
        }
    };
    dump("U", model.U());
    dump("V", model.V());
}

RewardModel read_instance(std::istream& in) {
    expect(in, "hottbandit-instance");
    int version = 0, M = 0, N = 0, r = 0, flag = 0;
    in >> version;
    if (version != 1) throw ParameterError("instance: unsupported version");
    std::string token;
    expect(in, "M");
    in >> M;
    expect(in, "N");
    in >> N;
    expect(in, "r");
    in >> r;
    if (!in || M < 1 || N < 1 || r < 1) throw ParameterError("instance: bad dimensions");
    expect(in, "sigma2");
    in >> token;
    const double sigma2 = parse_double(token);
    expect(in, "unnormalized");
    in >> flag;
    expect(in, "hott");
    std::vector<int> hott(r);
    for (int& a : hott) in >> a;
    auto read_matrix = [&](const char* name, int rows) {
        expect(in, name);
        Eigen::MatrixXd m(rows, r);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < r; ++j) {
                if (!(in >> token)) throw ParameterError("instance: truncated matrix");
                m(i, j) = parse_double(token);
            }
        return m;
    };
    Eigen::MatrixXd U = read_matrix("U", M);
    Eigen::MatrixXd V = read_matrix("V", N);
    return RewardModel(std::move(U), std::move(V), std::move(hott), sigma2, flag != 0);
}

void save_instance(const std::string& path, const RewardModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write " + path);
    write_instance(out, model);
}

RewardModel load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot read " + path);
    return read_instance(in);
}

}  // namespace hottbandit
