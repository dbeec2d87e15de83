#include "doctest.h"

#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "hottbandit/errors.hpp"
#include "hottbandit/harness.hpp"

using namespace hottbandit;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    auto cfg = parse_config(in);
    validate(cfg);
    return cfg;
}

const char* kSmall = R"(run_id = tiny
horizon = 10
seeds = 0..2
instance.kind = simplex
instance.users = 8
instance.items = 6
instance.rank = 2
instance.sigma2 = 0.01
policies = etc, am
policy.etc.explore = 4
)";

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse(std::string(kSmall) + "policy.am.ridge = 0.5\n# comment\n\ncsv.stride = 3\n");
    CHECK(cfg.run_id == "tiny");
    CHECK(cfg.horizon == 10);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(cfg.instance.kind == "simplex");
    CHECK(cfg.stride == 3);
    REQUIRE(cfg.policies.size() == 2u);
    CHECK(cfg.policies[0].kind == "etc");
    CHECK(std::get<EtcConfig>(cfg.policies[0].params).explore == 4);
    CHECK(std::get<AmConfig>(cfg.policies[1].params).ridge == 0.5);

    const auto listed = parse("seeds = 4, 9\npolicies = a\npolicy.a.kind = pes\npolicy.a.delta = 0.3\n");
    CHECK(listed.seeds == std::vector<std::uint64_t>{4, 9});
    const auto& pes = std::get<PesSpec>(listed.policies[0].params);
    CHECK(pes.absolute_delta);
    CHECK(pes.config.delta == 0.3);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("horizon = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("horizon = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse("horizon = 5\nhorizon = 6\n"), ConfigError);
    CHECK_THROWS_AS(parse("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse("policies = x\n"), ConfigError);
    CHECK_THROWS_AS(parse("policies = etc\npolicy.etc.nonsense = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("seeds = 5..2\n"), ConfigError);
    CHECK_THROWS_AS(parse("instance.kind = torus\n"), ConfigError);
    CHECK_THROWS_AS(parse("policies = etc, etc\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);
}

TEST_CASE("policy factory") {
    const auto p = make_policy("fast", "etc", {{"explore", "7"}});
    CHECK(p.name == "fast");
    CHECK(std::get<EtcConfig>(p.params).explore == 7);
    CHECK_THROWS_AS(make_policy("x", "nope"), ConfigError);
    CHECK_THROWS_AS(make_policy("x", "etc", {{"explore", "many"}}), ConfigError);
}

TEST_CASE("instances from specs") {
    InstanceSpec spec;
    spec.kind = "block";
    spec.users = 10;
    spec.items = 8;
    spec.rank = 2;
    spec.sigma2 = 0.04;
    spec.rescale = true;
    const auto m = make_instance(spec, 3);
    CHECK(m.rewards().cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(m.sigma2() == 0.04);
    CHECK(make_instance(spec, 3) == m);

    spec.kind = "eq7";
    spec.replicas = 2;
    CHECK(make_instance(spec, 0).users() == 6);
}

TEST_CASE("csv layout, row count and round trip") {
    auto cfg = parse(kSmall);
    const auto res = run_experiment(cfg, 1);
    REQUIRE(res.cells.size() == 6u);
    for (const auto& c : res.cells) CHECK(c.ok());

    std::ostringstream out;
    write_csv(out, res.run_id, res.cells);
    const std::string text = out.str();
    CHECK(text.rfind("run_id,policy,seed,round,cum_regret_general,cum_regret_simple,phase\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 3 * 10);
    CHECK(text.find('\r') == std::string::npos);

    std::istringstream in(text);
    std::string id;
    const auto back = read_csv(in, &id);
    CHECK(id == "tiny");
    REQUIRE(back.size() == res.cells.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].policy == res.cells[i].policy);
        CHECK(back[i].seed == res.cells[i].seed);
        CHECK(back[i].trace.general == res.cells[i].trace.general);
        CHECK(back[i].trace.simple == res.cells[i].trace.simple);
        CHECK(back[i].trace.phase == res.cells[i].trace.phase);
    }

    std::ostringstream empty;
    write_csv(empty, "none", {});
    const std::string header = empty.str();
    CHECK(std::count(header.begin(), header.end(), '\n') == 1);
}

TEST_CASE("mean curve is the per-seed mean") {
    const auto res = run_experiment(parse(kSmall), 1);
    for (const auto& curve : res.curves) {
        std::vector<const Cell*> mine;
        for (const auto& c : res.cells)
            if (c.policy == curve.policy) mine.push_back(&c);
        REQUIRE(curve.replicates == 3);
        REQUIRE(curve.mean_general.size() == 10u);
        for (int t = 0; t < 10; ++t) {
            double sum = 0, sq = 0;
            for (const Cell* c : mine) sum += c->trace.general[t];
            const double mean = sum / 3;
            for (const Cell* c : mine) sq += std::pow(c->trace.general[t] - mean, 2);
            const double se = std::sqrt(sq / 2) / std::sqrt(3.0);
            CHECK(curve.mean_general[t] == doctest::Approx(mean).epsilon(1e-12));
            CHECK(curve.se_general[t] == doctest::Approx(se).epsilon(1e-12));
        }
    }
}

TEST_CASE("same seed twice gives the same bytes, at any thread count") {
    auto cfg = parse(kSmall);
    cfg.seeds = {1, 1};
    const auto serial = run_experiment(cfg, 1);
    const auto parallel = run_experiment(cfg, 3);
    CHECK(serial.cells[0].trace == serial.cells[1].trace);
    std::ostringstream a, b;
    write_csv(a, "x", serial.cells);
    write_csv(b, "x", parallel.cells);
    CHECK(a.str() == b.str());
}

TEST_CASE("trace thinning keeps every stride-th round and the last") {
    auto cfg = parse(kSmall);
    cfg.stride = 4;
    const auto res = run_experiment(cfg, 1);
    CHECK(res.cells[0].rounds == std::vector<int>{4, 8, 10});
    CHECK(res.curves[0].rounds == std::vector<int>{4, 8, 10});
}

TEST_CASE("failing cells are recorded and skipped") {
    auto cfg = parse(kSmall);
    cfg.policies.push_back(make_policy("broken", "pes", {{"B", "0"}}));
    const auto res = run_experiment(cfg, 1);
    int failed = 0;
    for (const auto& c : res.cells) failed += !c.ok();
    CHECK(failed == 3);
    REQUIRE(res.curves.size() == 3u);
    CHECK(res.curves[2].replicates == 0);
    CHECK(res.curves[2].mean_general.empty());
    std::ostringstream out;
    write_csv(out, "x", res.cells);
    CHECK(out.str().find("broken") == std::string::npos);
}

TEST_CASE("svg uses a small element set") {
    const auto res = run_experiment(parse(kSmall), 1);
    std::ostringstream out;
    write_svg(out, res.curves, RegretMode::general, "tiny");
    const std::string svg = out.str();
    CHECK(svg.find("<svg") != std::string::npos);
    const std::set<std::string> allowed{"svg", "path", "line", "text", "rect", "g"};
    const std::regex tag("<([a-zA-Z]+)");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it)
        CHECK(allowed.count((*it)[1].str()) == 1);
    CHECK(svg.find("etc") != std::string::npos);
    CHECK(svg.find("http://www.w3.org/2000/svg") != std::string::npos);
}

TEST_CASE("zero trace plots as a flat line") {
    PolicyCurve c;
    c.policy = "zero";
    c.replicates = 1;
    c.rounds = {1, 2, 3};
    c.mean_general = c.se_general = c.mean_simple = c.se_simple = {0, 0, 0};
    std::ostringstream out;
    write_svg(out, {c}, RegretMode::simple, "flat");
    CHECK(out.str().find("<path") != std::string::npos);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3, 1e-300, 123456789.125, 0.0, -2.5})
        CHECK(std::stod(format_number(x)) == x);
    CHECK(format_number(0.5) == "0.5");
}
