#include "doctest.h"

#include <map>
#include <set>

#include "hottbandit/combinatorics.hpp"

using namespace hottbandit;

TEST_CASE("binomial matches Pascal's triangle") {
    std::vector<std::vector<double>> pascal(31);
    for (int n = 0; n <= 30; ++n) {
        pascal[n].assign(n + 1, 1.0);
        for (int k = 1; k < n; ++k) pascal[n][k] = pascal[n - 1][k - 1] + pascal[n - 1][k];
    }
    for (int n = 0; n <= 30; ++n)
        for (int k = 0; k <= n; ++k) CHECK(binomial(n, k) == pascal[n][k]);
    CHECK(binomial(5, 6) == 0.0);
    CHECK(binomial(5, -1) == 0.0);
}

TEST_CASE("combinations come out in lexicographic order") {
    std::vector<std::vector<int>> seen;
    const auto count = for_each_combination(5, 3, [&](std::span<const int> c) {
        seen.emplace_back(c.begin(), c.end());
        return true;
    });
    CHECK(count == 10);
    REQUIRE(seen.size() == 10);
    CHECK(seen.front() == std::vector<int>{0, 1, 2});
    CHECK(seen[1] == std::vector<int>{0, 1, 3});
    CHECK(seen.back() == std::vector<int>{2, 3, 4});
    CHECK(std::is_sorted(seen.begin(), seen.end()));
    CHECK(std::set<std::vector<int>>(seen.begin(), seen.end()).size() == 10);
}

TEST_CASE("combination visitor can stop early") {
    int calls = 0;
    const auto count = for_each_combination(10, 2, [&](std::span<const int>) { return ++calls < 4; });
    CHECK(count == 4);
    CHECK(calls == 4);
    CHECK(for_each_combination(3, 4, [](std::span<const int>) { return true; }) == 0);
    CHECK(for_each_combination(3, 0, [](std::span<const int> c) { return c.empty(); }) == 1);
}

TEST_CASE("sample_combination is uniform over subsets") {
    Rng rng(7);
    std::map<std::vector<int>, int> hits;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        auto c = sample_combination(6, 2, rng);
        REQUIRE(c.size() == 2);
        REQUIRE(c[0] < c[1]);
        ++hits[c];
    }
    CHECK(hits.size() == 15);
    // each cell has mean 4000 and sd ~ 61
    for (const auto& [c, n] : hits) CHECK(std::abs(n - draws / 15) < 300);
}

TEST_CASE("small_determinant agrees with LU") {
    Rng rng(3);
    std::normal_distribution<double> g;
    for (int r = 1; r <= 5; ++r)
        for (int t = 0; t < 20; ++t) {
            Eigen::MatrixXd m(r, r);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j) m(i, j) = g(rng);
            CHECK(small_determinant(m) == doctest::Approx(m.fullPivLu().determinant()).epsilon(1e-12));
        }
    CHECK(small_determinant(Eigen::MatrixXd(0, 0)) == 1.0);
}

TEST_CASE("Hadamard guard") {
    HadamardGuard guard;
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, 1, -1;  // attains the bound exactly
    guard.check(h, small_determinant(h));
    CHECK(guard.trips == 0);
    guard.check(h, 2.5);
    CHECK(guard.trips == 1);
    CHECK(guard.checks == 2);

    HadamardGuard other;
    other.check(h, -2.0);
    guard.merge(other);
    CHECK(guard.checks == 3);
    CHECK(guard.trips == 1);
}
