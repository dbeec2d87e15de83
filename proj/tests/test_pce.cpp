#include "doctest.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "hottbandit/pce.hpp"

using namespace hottbandit;

namespace {

UserGraph graph(int n, std::initializer_list<std::pair<int, int>> edges) {
    UserGraph g(n);
    for (auto [u, v] : edges) g.connect(u, v);
    return g;
}

}  // namespace

TEST_CASE("independent sets") {
    CHECK_FALSE(check_independent_set(graph(3, {{0, 1}, {1, 2}, {0, 2}}), 2));
    CHECK(check_independent_set(graph(3, {{0, 1}}), 2) == std::vector<int>{0, 2});
    CHECK(check_independent_set(graph(4, {}), 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(check_independent_set(graph(5, {{0, 1}, {0, 2}, {1, 2}, {3, 4}}), 2) == std::vector<int>{0, 3});
    CHECK_FALSE(check_independent_set(UserGraph(4, true), 2));
    CHECK(check_independent_set(UserGraph(4, true), 1) == std::vector<int>{0});
}

TEST_CASE("graph from candidate sets") {
    const ItemSets sets{{0, 2}, {1}, {2, 3}, {4}};
    const auto g = UserGraph::from_sets(sets, 5);
    CHECK(g.adjacent(0, 2));
    CHECK(g.adjacent(2, 0));
    CHECK_FALSE(g.adjacent(0, 1));
    CHECK_FALSE(g.adjacent(1, 3));
    CHECK(g.neighbors(0) == std::vector<int>{2});
    CHECK(g.neighbors(3).empty());
}

TEST_CASE("pruning") {
    const std::vector<double> row{1.0, 0.4, 0.95};
    const std::vector<int> all{0, 1, 2};
    CHECK(prune_items(all, row.data(), 0.1) == std::vector<int>{0, 2});
    CHECK(prune_items(all, row.data(), 0.6) == all);
    CHECK(prune_items(all, row.data(), 0.0) == std::vector<int>{0});
    // best item outside the set: the estimated best within the set anchors
    CHECK(prune_items({1, 2}, row.data(), 0.1) == std::vector<int>{2});

    Eigen::MatrixXd est(2, 3);
    est << 1.0, 0.4, 0.95, 0.2, 0.2, 0.1;
    const auto pruned = prune_items(ItemSets{{0, 1, 2}, {0, 1, 2}}, est, 0.0);
    CHECK(pruned[0] == std::vector<int>{0});
    CHECK(pruned[1] == std::vector<int>{0, 1});  // ties both stay
}

TEST_CASE("expansion") {
    const auto m = eq7_instance(0.5, 0.2);
    const Eigen::MatrixXd& R = m.rewards();
    const ItemSets groups{{0}, {1}};
    const ItemSets sets{{0}, {1}, {0}};

    SUBCASE("user adjacent to both seeds picks up both hott items") {
        const auto g = graph(3, {{0, 2}, {1, 2}});
        const auto out = expand_item_sets(g, {0, 1}, 0.05, R, groups, sets);
        CHECK(out.sets[2] == std::vector<int>{0, 1});
        CHECK(out.sets[0] == sets[0]);
        CHECK(out.expanded == 1);
    }
    SUBCASE("user adjacent to one seed is untouched") {
        const auto g = graph(3, {{0, 2}});
        const auto out = expand_item_sets(g, {0, 1}, 0.05, R, groups, sets);
        CHECK(out.sets == sets);
        CHECK(out.expanded == 0);
    }
    SUBCASE("tight threshold keeps the better group item only") {
        const auto g = graph(3, {{0, 2}, {1, 2}});
        const auto out = expand_item_sets(g, {0, 1}, 0.01, R, groups, sets);
        CHECK(out.sets[2] == std::vector<int>{0});
    }
    SUBCASE("wide threshold gives the union of the group sets") {
        const auto g = graph(3, {{0, 2}, {1, 2}});
        const ItemSets wide{{0, 2}, {1, 2}};
        const auto out = expand_item_sets(g, {0, 1}, 1.0, R, wide, sets);
        CHECK(out.sets[2] == std::vector<int>{0, 1, 2});
    }
}

TEST_CASE("group formation") {
    SUBCASE("lonely seed keeps its own set") {
        const ItemSets sets{{0, 2}, {1}};
        const auto g = UserGraph::from_sets(sets, 3);
        const auto groups = form_groups(g, {0, 1}, sets);
        CHECK(groups.items[0] == sets[0]);
        CHECK(groups.items[1] == sets[1]);
        CHECK(groups.users[0] == std::vector<int>{0});
    }
    SUBCASE("intersection over the seed and its neighbours") {
        const ItemSets sets{{0, 2}, {0, 1}, {0, 2}, {3}};
        const auto g = UserGraph::from_sets(sets, 4);
        const auto groups = form_groups(g, {0, 3}, sets);
        CHECK(groups.items[0] == std::vector<int>{0});
        CHECK(groups.users[0] == std::vector<int>{0, 1, 2});
        CHECK(groups.items[1] == std::vector<int>{3});
        CHECK(groups.empty_fallbacks == 0);
    }
    SUBCASE("empty intersection falls back to the seed's set") {
        const ItemSets sets{{0, 1}, {1, 2}, {0, 2}};
        const auto g = UserGraph::from_sets(sets, 3);
        const auto groups = form_groups(g, {0}, sets);
        CHECK(groups.items[0] == sets[0]);
        CHECK(groups.empty_fallbacks == 1);
    }
}

TEST_CASE("eq7: the third user's set still meets the first user's at k = 1/20") {
    const auto m = eq7_instance(0.5, 0.2);
    const auto sets = prune_items(ItemSets(3, {0, 1, 2}), m.rewards(), 3.0 / 20);
    CHECK(sets[0] == std::vector<int>{0});
    std::vector<int> common;
    std::set_intersection(sets[0].begin(), sets[0].end(), sets[2].begin(), sets[2].end(),
                          std::back_inserter(common));
    CHECK_FALSE(common.empty());
    CHECK(UserGraph::from_sets(sets, 3).adjacent(0, 2));
}

TEST_CASE("noiseless run collapses every set to the best item") {
    const auto m = eq7_instance(0.5, 0.2, 4);
    Environment env(m, 0, 20000, "pce");
    Rng rng(0);
    const auto res = run_pce(env, PceConfig{}, rng);
    CHECK_FALSE(res.stage1_incomplete);
    CHECK(res.best_survived);
    const auto bw = best_worst_items(m);
    for (int u = 0; u < m.users(); ++u) CHECK(res.final_sets[u] == std::vector<int>{bw[u].best});
    CHECK(res.trace.rounds() == 20000);
    // flat tail once the sets are singletons
    CHECK(res.trace.general.back() == res.trace.general[res.trace.rounds() / 2]);
}

TEST_CASE("noisy eq7 runs find seeds with distinct best items") {
    const auto m = eq7_instance(0.5, 0.2, 10, 0.0025);
    const auto bw = best_worst_items(m);
    int good = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Environment env(m, seed, 20000, "pce");
        Rng rng = make_rng(seed, "test/pce");
        const auto res = run_pce(env, PceConfig{}, rng);
        REQUIRE(res.seeds.size() == 2u);
        std::set<int> best;
        for (int s : res.seeds) best.insert(bw[s].best);
        good += best == std::set<int>{0, 1} && res.best_survived;
        CHECK(res.ell0 >= 0);
        CHECK(std::is_sorted(res.trace.general.begin(), res.trace.general.end()));
    }
    CHECK(good == 5);
}

TEST_CASE("stage one cut short by the horizon") {
    const auto m = generate_block_instance(30, 30, 2, 1).rescaled().with_noise(0.25);
    Environment env(m, 0, 5, "pce");
    Rng rng(0);
    const auto res = run_pce(env, PceConfig{}, rng);
    CHECK(res.stage1_incomplete);
    CHECK(res.trace.rounds() == 5);
}

TEST_CASE("runs are reproducible and phase logs are tabular") {
    const auto m = generate_block_instance(20, 20, 2, 3).rescaled().with_noise(0.0025);
    auto once = [&] {
        Environment env(m, 9, 3000, "pce");
        Rng rng(9);
        return run_pce(env, PceConfig{}, rng);
    };
    const auto a = once(), b = once();
    CHECK(a.trace == b.trace);
    REQUIRE_FALSE(a.phases.empty());
    std::ostringstream log;
    write_phase_log(log, a.phases);
    const std::string text = log.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(a.phases.size()) + 1);
}
