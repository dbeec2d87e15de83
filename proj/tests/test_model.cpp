#include "doctest.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hottbandit/combinatorics.hpp"
#include "hottbandit/errors.hpp"
#include "hottbandit/model.hpp"

using namespace hottbandit;

namespace {

// Brute-force largest det^2 over all r-subsets of V's rows, with its argmax.
std::pair<double, std::vector<int>> max_det2(const Eigen::MatrixXd& V, int r) {
    double best = -1;
    std::vector<int> arg;
    for_each_combination(static_cast<int>(V.rows()), r, [&](std::span<const int> J) {
        Eigen::MatrixXd sub(r, r);
        for (int i = 0; i < r; ++i) sub.row(i) = V.row(J[i]);
        const double d = sub.determinant();
        if (d * d > best) {
            best = d * d;
            arg.assign(J.begin(), J.end());
        }
        return true;
    });
    return {best, arg};
}

bool in_hott(const RewardModel& m, int item) {
    return std::find(m.hott().begin(), m.hott().end(), item) != m.hott().end();
}

}  // namespace

TEST_CASE("block instance layout") {
    const auto m = generate_block_instance(8, 6, 2, 11);
    CHECK(m.hott() == std::vector<int>{4, 5});
    CHECK(m.unnormalized());
    double alpha = 0;
    for (int i = 0; i < 4; ++i) alpha = std::max(alpha, m.V().row(i).maxCoeff());
    CHECK(m.V()(4, 0) == doctest::Approx(2 * alpha));
    CHECK(m.V()(5, 1) == doctest::Approx(2 * alpha));
    CHECK(m.V()(4, 1) == 0.0);
    CHECK(m.V()(5, 0) == 0.0);
    for (int u = 0; u < 8; ++u) {
        CHECK(m.U().row(u).sum() == 1.0);
        CHECK(m.U()(u, u % 2) == 1.0);
    }
    for (int i = 0; i < 4; ++i) {
        CHECK(m.V().row(i).minCoeff() >= 0.0);
        CHECK(m.V().row(i).sum() <= 2 * alpha * (1 + 1e-12));
    }
    CHECK(verify_hott(m).ok);
}

TEST_CASE("block instance with one hott item") {
    const auto m = generate_block_instance(2, 3, 1, 5);
    CHECK(m.hott() == std::vector<int>{2});
    for (const auto& bw : best_worst_items(m)) CHECK(bw.best == 2);
    CHECK_THROWS_AS(generate_block_instance(1, 6, 2, 0), ParameterError);
    CHECK_THROWS_AS(generate_block_instance(8, 3, 2, 0), ParameterError);
}

TEST_CASE("block instances pass the hull check for several seeds") {
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(verify_hott(generate_block_instance(8, 6, 2, s)).ok);
}

TEST_CASE("simplex instance: nonnegative, on the simplex, A maximizes det^2") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto m = generate_simplex_instance(20, 8, 2, s, 0.1);
        CHECK(m.U().minCoeff() >= 0.0);
        CHECK(m.V().minCoeff() >= 0.0);
        for (int u = 0; u < 20; ++u) CHECK(m.U().row(u).sum() <= 1 + 1e-12);
        for (int i = 0; i < 8; ++i) CHECK(m.V().row(i).sum() <= 1 + 1e-12);
        CHECK(verify_hott(m).ok);
        const auto [best, arg] = max_det2(m.V(), 2);
        CHECK(arg == m.hott());
        CHECK(compute_gaps(m).delta_det > 0.0);
    }
}

TEST_CASE("simplex instance with r = 1") {
    const auto m = generate_simplex_instance(5, 4, 1, 2, 0.2);
    std::vector<double> v(m.V().data(), m.V().data() + 4);
    const int top = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    CHECK(m.hott() == std::vector<int>{top});
    std::sort(v.rbegin(), v.rend());
    CHECK(compute_gaps(m).delta_det == doctest::Approx(v[0] * v[0] - v[1] * v[1]));
    CHECK_THROWS_AS(generate_simplex_instance(5, 4, 1, 2, 1.0), ParameterError);
}

TEST_CASE("best and worst items of random simplex instances lie in A") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto m = generate_simplex_instance(15, 10, 2 + static_cast<int>(s % 2), s, 0.2);
        for (const auto& bw : best_worst_items(m)) {
            CHECK(in_hott(m, bw.best));
            CHECK(in_hott(m, bw.worst));
        }
    }
}

TEST_CASE("eq7 fixture") {
    const auto m = eq7_instance(0.5, 0.3);
    const Eigen::MatrixXd& R = m.rewards();
    CHECK(R(0, 0) == 1.0);
    CHECK(R(2, 0) == doctest::Approx(0.5));
    CHECK(R(2, 1) == doctest::Approx(0.2));
    CHECK(R(2, 2) == doctest::Approx(0.5 - 0.2));

    const auto bw = best_worst_items(m);
    CHECK(bw[2].best == 0);
    CHECK(bw[2].worst == 1);

    const auto g = compute_gaps(m);
    CHECK(g.delta_hott == doctest::Approx(1.0));
    CHECK(g.delta == doctest::Approx(0.2));
    CHECK(g.delta_det == doctest::Approx(5.0 / 9.0));
    CHECK(std::accumulate(g.cluster_sizes.begin(), g.cluster_sizes.end(), 0) == 3);

    const auto hull = verify_hott(m);
    CHECK(hull.ok);
    CHECK(hull.witness[2][0] == doctest::Approx(1.0 / 3.0));
    CHECK(hull.witness[2][1] == doctest::Approx(2.0 / 3.0));

    const auto rep = eq7_instance(0.5, 0.2, 10);
    CHECK(rep.users() == 30);
    CHECK(rep.rewards().row(17) == rep.rewards().row(2));
    CHECK(compute_gaps(rep).delta == doctest::Approx(2 * 0.2 / 3));
}

TEST_CASE("determinant gap for a single column") {
    Eigen::MatrixXd U(2, 1), V(3, 1);
    U << 1, 0.5;
    V << 0.9, 0.5, 0.2;
    const RewardModel m(U, V, {0}, 0.0);
    CHECK(compute_gaps(m).delta_det == doctest::Approx(0.56));
}

TEST_CASE("gap report bookkeeping") {
    const auto m = generate_simplex_instance(40, 12, 3, 9, 0.2);
    const auto g = compute_gaps(m);
    CHECK(std::accumulate(g.cluster_sizes.begin(), g.cluster_sizes.end(), 0) == 40);
    const int smallest = *std::min_element(g.cluster_sizes.begin(), g.cluster_sizes.end());
    CHECK(smallest >= g.kappa * 40 / 3 - 1e-12);
    CHECK(g.delta >= 0.0);
    CHECK(g.delta_hott >= 0.0);

    // two users whose top two items tie
    Eigen::MatrixXd U(1, 2), V(3, 2);
    U << 1, 1;
    V << 1, 0, 0, 1, 0.25, 0.25;
    const RewardModel tie(U, V, {0, 1}, 0.0);
    const auto t = compute_gaps(tie);
    CHECK(t.degenerate);
    CHECK(t.delta == 0.0);

    CHECK(std::isnan(compute_gaps(m, 10).delta_det));
}

TEST_CASE("hull check") {
    Eigen::MatrixXd basis(2, 2);
    basis << 1, 0, 0, 1;
    auto zero = hull_coefficients(basis, Eigen::Vector2d(0, 0));
    REQUIRE(zero);
    CHECK(zero->norm() == 0.0);
    CHECK_FALSE(hull_coefficients(basis, Eigen::Vector2d(2, 2)));
    CHECK_FALSE(hull_coefficients(basis, Eigen::Vector2d(-0.1, 0.5)));

    Eigen::MatrixXd U = Eigen::MatrixXd::Identity(2, 2), V(3, 2);
    V << 1, 0, 0, 1, 2, 2;
    const RewardModel out(U, V, {0, 1}, 0.0);
    const auto h = verify_hott(out);
    CHECK_FALSE(h.ok);
    CHECK(h.first_infeasible == 2);
}

TEST_CASE("observe") {
    const auto quiet = eq7_instance();
    Rng rng(1);
    CHECK(observe(quiet, 0, 0, rng) == 1.0);
    CHECK(observe(quiet, 2, 2, rng) == quiet.reward(2, 2));

    const auto loud = eq7_instance(0.5, 0.2, 1, 0.25);
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = observe(loud, 2, 1, rng) - loud.reward(2, 1);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n, var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 4 * 0.5 / std::sqrt(n));
    CHECK(std::abs(var - 0.25) < 0.05 * 0.25);
}

TEST_CASE("regret increments") {
    const double eps = 0.2;
    const auto m = eq7_instance(0.5, eps);
    std::vector<Slate> best{{0}, {1}, {0}};
    CHECK(regret_increment(m, best, RegretMode::general) == 0.0);

    std::vector<Slate> third(3, Slate{2});
    CHECK(regret_increment(m, third, RegretMode::general) ==
          doctest::Approx((2.0 / 3 + 1.0 / 3 + 2 * eps / 3) / 3));

    std::vector<Slate> pair(3, Slate{0, 1});
    CHECK(regret_increment(m, pair, RegretMode::simple) == 0.0);

    std::vector<Slate> dup(3, Slate{0, 0});
    CHECK_THROWS_AS(regret_increment(m, dup, RegretMode::simple), ContractViolation);
    CHECK_THROWS_AS(regret_increment(m, pair, RegretMode::general), ContractViolation);
    std::vector<Slate> short_list(2, Slate{0});
    CHECK_THROWS_AS(regret_increment(m, short_list, RegretMode::simple), ContractViolation);
}

TEST_CASE("regret traces accumulate and stay monotone") {
    const auto m = generate_simplex_instance(10, 6, 2, 4, 0.2);
    RegretTrace trace;
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        std::vector<Slate> recs(10);
        for (auto& s : recs) s = {uniform_index(rng, 6)};
        const double g = regret_increment(m, recs, RegretMode::general);
        const double before = t ? trace.general.back() : 0.0;
        regret_step(trace, m, recs, t / 10);
        CHECK(trace.general.back() == doctest::Approx(before + g));
        CHECK(trace.simple.back() <= trace.general.back() + 1e-12);
    }
    CHECK(trace.rounds() == 50);
    CHECK(std::is_sorted(trace.general.begin(), trace.general.end()));
    CHECK(std::is_sorted(trace.simple.begin(), trace.simple.end()));
    CHECK(trace.phase.back() == 4);
}

TEST_CASE("slate general regret charges the mean item gap") {
    const auto m = eq7_instance(0.5, 0.2);
    std::vector<Slate> recs{{0, 2}, {0, 1}, {1, 2}};
    const auto step = round_regret(m, recs);
    const double g0 = (0.0 + 2.0 / 3) / 2, g1 = (1.0 + 0.0) / 2, g2 = (0.2 + 2 * 0.2 / 3) / 2;
    CHECK(step.general == doctest::Approx((g0 + g1 + g2) / 3));
    CHECK(step.simple == doctest::Approx((0.0 + 0.0 + 2 * 0.2 / 3) / 3));
}

TEST_CASE("instance files round-trip exactly") {
    const auto m = generate_block_instance(7, 9, 3, 21, 0.3);
    std::stringstream ss;
    write_instance(ss, m);
    const auto back = read_instance(ss);
    CHECK(back == m);
    CHECK(back.unnormalized());

    std::stringstream bad("not an instance");
    CHECK_THROWS_AS(read_instance(bad), ParameterError);
}

TEST_CASE("rescale and noise copies") {
    const auto m = generate_block_instance(6, 8, 2, 3);
    const auto r = m.rescaled();
    CHECK(r.rewards().cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK_FALSE(r.unnormalized());
    const auto n = r.with_noise(0.04);
    CHECK(n.sigma() == doctest::Approx(0.2));
    CHECK(n.rewards() == r.rewards());
    CHECK_THROWS_AS(RewardModel(m.U(), m.V(), {5, 4}, 0.0), ParameterError);
    CHECK_THROWS_AS(RewardModel(m.U(), m.V(), {6, 7}, -1.0), ParameterError);
}

TEST_CASE("same inputs give identical reports") {
    const auto a = generate_simplex_instance(30, 10, 2, 77, 0.2);
    const auto b = generate_simplex_instance(30, 10, 2, 77, 0.2);
    CHECK(a == b);
    const auto ga = compute_gaps(a), gb = compute_gaps(b);
    CHECK(ga.delta == gb.delta);
    CHECK(ga.delta_det == gb.delta_det);
    CHECK(ga.opinionated_users == gb.opinionated_users);
}
