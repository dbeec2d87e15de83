#include "doctest.h"

#include "hottbandit/environment.hpp"
#include "hottbandit/errors.hpp"

using namespace hottbandit;

TEST_CASE("noiseless play returns the mean rewards and charges regret") {
    const auto m = eq7_instance(0.5, 0.2);
    Environment env(m, 0, 3, "p");
    const std::vector<int> items{2, 2, 2};
    const auto got = env.play(items);
    REQUIRE(got.size() == 3);
    for (int u = 0; u < 3; ++u) CHECK(got[u] == m.reward(u, 2));
    CHECK(env.round() == 1);
    CHECK(env.trace().general.back() == doctest::Approx((2.0 / 3 + 1.0 / 3 + 0.4 / 3) / 3));
    CHECK(env.trace().policy == "p");
}

TEST_CASE("slate play flattens rewards in slate order") {
    const auto m = eq7_instance();
    Environment env(m, 0, 1);
    std::vector<Slate> slates{{0, 1}, {2, 1}, {1, 0}};
    std::vector<double> out;
    env.play(slates, out);
    REQUIRE(out.size() == 6);
    CHECK(out[2] == m.reward(1, 2));
    CHECK(out[5] == m.reward(2, 0));
    CHECK(env.exhausted());
    CHECK_THROWS_AS(env.play(slates, out), ContractViolation);
}

TEST_CASE("noise streams depend on seed and policy label only") {
    const auto m = eq7_instance(0.5, 0.2, 2, 0.25);
    const std::vector<int> items(6, 0);
    Environment a(m, 4, 5, "x"), b(m, 4, 5, "x"), c(m, 4, 5, "y"), d(m, 5, 5, "x");
    const auto ra = a.play(items), rb = b.play(items), rc = c.play(items), rd = d.play(items);
    CHECK(ra == rb);
    CHECK(ra != rc);
    CHECK(ra != rd);
}

TEST_CASE("finish fills the horizon exactly like repeated play") {
    const auto m = generate_simplex_instance(12, 7, 2, 3, 0.2, 0.1);
    std::vector<int> items(12);
    for (int u = 0; u < 12; ++u) items[u] = u % 7;
    Environment played(m, 1, 40), fast(m, 1, 40);
    played.set_phase(2);
    fast.set_phase(2);
    while (!played.exhausted()) played.play(items);
    fast.finish(items);
    CHECK(fast.round() == 40);
    CHECK(played.trace() == fast.trace());
    fast.finish(items);  // no-op once exhausted
    CHECK(fast.trace().rounds() == 40);
    CHECK_THROWS_AS(fast.finish(std::vector<int>{0}), ContractViolation);
}

TEST_CASE("bad arguments") {
    const auto m = eq7_instance();
    CHECK_THROWS_AS(Environment(m, 0, -1), ParameterError);
    Environment env(m, 0, 5);
    CHECK_THROWS_AS(env.play(std::vector<int>{0, 1}), ContractViolation);
    std::vector<Slate> dup{{0, 0}, {1}, {1}};
    std::vector<double> out;
    CHECK_THROWS_AS(env.play(dup, out), ContractViolation);
}
