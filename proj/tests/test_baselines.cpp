#include "doctest.h"

#include <cmath>
#include <set>

#include "hottbandit/baselines.hpp"
#include "hottbandit/errors.hpp"

using namespace hottbandit;

namespace {

Eigen::MatrixXd blobs(int per, Rng& rng) {
    std::normal_distribution<double> g(0.0, 0.1);
    const double centers[3][2] = {{0, 0}, {5, 0}, {0, 5}};
    Eigen::MatrixXd pts(3 * per, 2);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per; ++i) {
            pts(c * per + i, 0) = centers[c][0] + g(rng);
            pts(c * per + i, 1) = centers[c][1] + g(rng);
        }
    return pts;
}

}  // namespace

TEST_CASE("k-means separates blobs and never increases its objective") {
    Rng data(1);
    const auto pts = blobs(20, data);
    Rng rng(2);
    const auto km = kmeans(pts, 3, rng);
    REQUIRE(km.labels.size() == 60u);
    for (int c = 0; c < 3; ++c) {
        std::set<int> labels;
        for (int i = 0; i < 20; ++i) labels.insert(km.labels[c * 20 + i]);
        CHECK(labels.size() == 1u);
    }
    CHECK(std::set<int>(km.labels.begin(), km.labels.end()).size() == 3u);
    for (std::size_t i = 1; i < km.objective.size(); ++i)
        CHECK(km.objective[i] <= km.objective[i - 1] + 1e-12);
}

TEST_CASE("k-means is seed-deterministic") {
    Rng data(3);
    const auto pts = blobs(15, data);
    Rng a(7), b(7);
    const auto ka = kmeans(pts, 3, a), kb = kmeans(pts, 3, b);
    CHECK(ka.labels == kb.labels);
    CHECK(ka.centroids == kb.centroids);
}

TEST_CASE("k-means with more clusters than distinct points") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(5, 2);
    pts(4, 0) = 1.0;
    Rng rng(0);
    const auto km = kmeans(pts, 3, rng);
    CHECK(km.labels.size() == 5u);
    for (int l : km.labels) CHECK((l >= 0 && l < 3));
    CHECK(km.objective.back() == doctest::Approx(0.0));
}

TEST_CASE("seventy percent rule") {
    // ten sets; item 0 in all, item 1 in seven, item 2 in six
    std::vector<std::vector<int>> sets(10);
    for (int i = 0; i < 10; ++i) {
        sets[i].push_back(0);
        if (i < 7) sets[i].push_back(1);
        if (i < 6) sets[i].push_back(2);
    }
    CHECK(robust_intersection(sets, 3) == std::vector<int>{0, 1});
    CHECK(robust_intersection(sets, 3, 1.0) == std::vector<int>{0});
    CHECK(robust_intersection(sets, 3, 0.0) == std::vector<int>{0, 1, 2});
    // three sets: ceil(2.1) = 3 needed
    CHECK(robust_intersection({{0, 1}, {0, 1}, {0}}, 2) == std::vector<int>{0});
}

TEST_CASE("observation bank averages per entry") {
    ObservationBank bank(2, 3);
    bank.add(0, 1, 1.0);
    bank.add(0, 1, 3.0);
    bank.add(1, 2, -1.0);
    CHECK(bank.count(0, 1) == 2);
    const auto z = bank.block({0, 1}, {1, 2});
    REQUIRE(z.entries.size() == 2u);
    CHECK(z.entries[0].row == 0);
    CHECK(z.entries[0].col == 0);
    CHECK(z.entries[0].mean == 2.0);
    CHECK(z.entries[1].mean == -1.0);
    bank.clear();
    CHECK(bank.block({0, 1}, {0, 1, 2}).entries.empty());
}

TEST_CASE("noiseless ETC with enough exploration commits to the best items") {
    const auto m = generate_block_instance(20, 10, 2, 1);
    Environment env(m, 0, 200, "etc");
    Rng rng(0);
    const auto res = run_etc(env, EtcConfig{60, {}}, rng);
    const auto bw = best_worst_items(m);
    for (int u = 0; u < 20; ++u) CHECK(res.commit[u] == bw[u].best);
    CHECK(res.trace.general[199] == res.trace.general[60]);
}

TEST_CASE("ETC exploring almost to the horizon grows linearly") {
    const auto m = generate_simplex_instance(30, 12, 2, 2, 0.2);
    Environment env(m, 0, 400, "etc");
    Rng rng(0);
    const auto res = run_etc(env, EtcConfig{399, {}}, rng);
    double slope = 0;
    for (int u = 0; u < 30; ++u) slope += m.best_reward(u) - m.rewards().row(u).mean();
    slope /= 30;
    CHECK(res.trace.general[398] / 399 == doctest::Approx(slope).epsilon(0.1));
}

TEST_CASE("AM started at the truth never errs") {
    const auto m = generate_block_instance(12, 8, 2, 4);
    AmConfig cfg;
    cfg.explore = 0.0;
    cfg.init_users = m.U();
    cfg.init_items = m.V();
    Environment env(m, 0, 100, "am");
    Rng rng(0);
    const auto trace = run_am(env, cfg, rng);
    CHECK(trace.general.back() == doctest::Approx(0.0).epsilon(1e-9));

    cfg.init_users = Eigen::MatrixXd::Zero(3, 2);
    Environment env2(m, 0, 10, "am");
    CHECK_THROWS_AS(run_am(env2, cfg, rng), ParameterError);
}

TEST_CASE("AM with full exploration is uniform play") {
    const auto m = generate_simplex_instance(40, 10, 2, 5, 0.2);
    AmConfig cfg;
    cfg.explore = 1.0;
    cfg.decay = false;
    Environment env(m, 0, 2000, "am");
    Rng rng(0);
    const auto trace = run_am(env, cfg, rng);
    double slope = 0;
    for (int u = 0; u < 40; ++u) slope += m.best_reward(u) - m.rewards().row(u).mean();
    slope /= 40;
    CHECK(trace.general.back() / 2000 == doctest::Approx(slope).epsilon(0.05));
}

TEST_CASE("PES with one cluster shrinks a single item pool") {
    const auto m = generate_block_instance(30, 20, 1, 2);
    PesConfig cfg;
    cfg.B = 5;
    cfg.delta = compute_gaps(m).delta;
    cfg.clusters = 1;
    Environment env(m, 0, 500, "pes");
    Rng rng(0);
    const auto res = run_pes(env, cfg, rng);
    for (int l : res.labels) CHECK(l == 0);
    for (std::size_t ph = 1; ph < res.active.size(); ++ph)
        for (int x : res.active[ph][0])
            CHECK(std::count(res.active[ph - 1][0].begin(), res.active[ph - 1][0].end(), x) == 1);
}

TEST_CASE("noiseless PES narrows each cluster to its hott item") {
    const auto m = generate_block_instance(40, 30, 2, 3);
    PesConfig cfg;
    cfg.B = 20;
    cfg.delta = compute_gaps(m).delta;
    Environment env(m, 0, 2000, "pes");
    Rng rng(0);
    const auto res = run_pes(env, cfg, rng);
    REQUIRE(res.phases >= 1);
    std::set<int> finals;
    for (const auto& a : res.active.back()) {
        REQUIRE(a.size() == 1u);
        finals.insert(a[0]);
    }
    CHECK(finals == std::set<int>(m.hott().begin(), m.hott().end()));
    CHECK(res.fallbacks == 0);
    const auto& g = res.trace.general;
    CHECK(g.back() == g[res.exploit_start]);
}

TEST_CASE("PES rejects bad parameters") {
    const auto m = eq7_instance();
    Environment env(m, 0, 10);
    Rng rng(0);
    PesConfig cfg;
    cfg.B = 0;
    CHECK_THROWS_AS(run_pes(env, cfg, rng), ParameterError);
    cfg.B = 1;
    cfg.delta = 0.0;
    CHECK_THROWS_AS(run_pes(env, cfg, rng), ParameterError);
}
