#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "regime_q/config.hpp"
#include "regime_q/experiment.hpp"

using namespace regime_q;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("regime_q_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string error_of(const std::string& text) {
    try {
        load_config_text(text);
    } catch (const config_error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("presets survive a serialize round trip", "[config]") {
    for (const auto& c : {preset_emv_p1(), preset_emv_p2()}) {
        const LearningConfig back = load_config_text(serialize(c));
        CHECK(back == c);
        CHECK(serialize(back) == serialize(c));
    }
}

TEST_CASE("preset values", "[config]") {
    const LearningConfig a = preset("emv_p1"), b = preset("emv_p2");
    CHECK(a.theta_true.v == Vec4{{0.95, -0.833, 0.2, 0.3}});
    CHECK(b.theta_true.v == Vec4{{0.733, -0.428, 0.15, 0.35}});
    CHECK(a.K == 25);
    CHECK(a.n_paths == 100);
    CHECK(a.n_iters == 6000);
    CHECK(b.n_paths == 50);
    CHECK(b.n_iters == 5000);
    CHECK(a.entropy_order == 1);
    CHECK(b.entropy_order == 2);
    CHECK(b.algorithm == Algorithm::actor_critic);
    CHECK(b.w1 == 0.1);
    CHECK(b.w2 == 0.5);
    CHECK_THROWS_AS(preset("emv_p3"), config_error);
}

TEST_CASE("config files override a preset", "[config]") {
    const LearningConfig c = load_config_text(R"(
preset = "emv_p2"   # base
[learning]
seed = 11
n_iters = 40
[schedules.sigma1]
rate = 1e-4
)");
    CHECK(c.seed == 11);
    CHECK(c.n_iters == 40);
    CHECK(c.schedules[2].rate == 1e-4);
    CHECK(c.entropy_order == 2);
    CHECK(c.market == preset_emv_p2().market);
}

TEST_CASE("config errors name the offending key", "[config]") {
    CHECK_THAT(error_of("[learning]\nbogus = 1\n"), Catch::Matchers::ContainsSubstring("learning.bogus"));
    CHECK_THAT(error_of("[learning]\nK = many\n"), Catch::Matchers::ContainsSubstring("learning.K"));
    CHECK_THAT(error_of("[market]\ngenerator = [-1, 1, 1, -0.5]\n"),
               Catch::Matchers::ContainsSubstring("sum to zero"));
    CHECK_THAT(error_of("[market]\nsigma = [0.2, -0.3]\n"), Catch::Matchers::ContainsSubstring("positive"));
    CHECK_THAT(error_of("[learning]\nentropy_order = 3\n"), Catch::Matchers::ContainsSubstring("entropy order"));
    CHECK_THAT(error_of("[learning]\nalgorithm = \"sgd\"\n"), Catch::Matchers::ContainsSubstring("sgd"));
    CHECK_THAT(error_of("[schedules.kappa]\nrate = 1\n"), Catch::Matchers::ContainsSubstring("kappa"));
}

TEST_CASE("trace csv header and parse", "[csv]") {
    LearningConfig c = preset_emv_p1();
    c.n_iters = 3;
    c.n_paths = 6;
    const TrainTrace tr = train(c);
    const std::string text = trace_csv(tr);
    CHECK(text.rfind("iter,rho1,rho2,sigma1,sigma2,mean_abs_G,clamps,blowups\n", 0) == 0);
    const auto rows = parse_trace_csv(text);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].iter == 1);
    CHECK(rows[2].iter == 3);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK_THAT(rows[k].params[j], Catch::Matchers::WithinRel(tr.rows[k].params[j], 1e-9));
    CHECK(decimal(1e-7).find('e') == std::string::npos);
    CHECK_THROWS_AS(parse_trace_csv("iter,x\n1,2\n"), config_error);
}

TEST_CASE("smoke run writes a trace that reproduces", "[experiment]") {
    LearningConfig c = preset_emv_p1();
    c.n_iters = 10;
    std::ostringstream log, err;
    const fs::path d1 = scratch("smoke1"), d2 = scratch("smoke2"), d3 = scratch("smoke3");
    REQUIRE(run_experiment(c, {d1, true}, log, err) == 0);
    REQUIRE(run_experiment(c, {d2, false}, log, err) == 0);
    const std::string a = slurp(d1 / "trace.csv");
    std::size_t lines = 0;
    for (char ch : a) lines += ch == '\n';
    CHECK(lines == 11);
    CHECK(a == slurp(d2 / "trace.csv"));
    CHECK(fs::exists(d1 / "convergence.svg"));
    CHECK_FALSE(fs::exists(d2 / "convergence.svg"));

    const auto man = nlohmann::json::parse(slurp(d1 / "manifest.json"));
    CHECK(man["seed"] == c.seed);
    CHECK(man["name"] == "emv_p1");
    const LearningConfig back = config_from_manifest(d1 / "manifest.json");
    CHECK(back == c);
    REQUIRE(run_experiment(back, {d3, false}, log, err) == 0);
    CHECK(slurp(d3 / "trace.csv") == a);

    LearningConfig other = c;
    other.seed = 8;
    REQUIRE(run_experiment(other, {d2, false}, log, err) == 0);
    CHECK(slurp(d2 / "trace.csv") != a);
}

TEST_CASE("command line tool", "[cli]") {
    const char* exe = std::getenv("REGIME_Q_CLI");
    if (!exe) SKIP("REGIME_Q_CLI not set");
    const fs::path d = scratch("cli");
    const std::string q = std::string("\"") + exe + "\"";
    CHECK(std::system((q + " print-config --preset emv_p2 > \"" + (d / "p2.toml").string() + "\"").c_str()) == 0);
    CHECK(load_config(( d / "p2.toml").string()) == preset_emv_p2());
    const std::string out = (d / "run").string();
    CHECK(std::system((q + " run --config \"" + (d / "p2.toml").string() + "\" --iters 3 --seed 5 --out \"" + out +
                       "\" > /dev/null").c_str()) == 0);
    CHECK(parse_trace_csv(slurp(fs::path(out) / "trace.csv")).size() == 3);
    const std::string again = (d / "again").string();
    CHECK(std::system((q + " run --manifest \"" + out + "/manifest.json\" --out \"" + again + "\" > /dev/null").c_str()) ==
          0);
    CHECK(slurp(fs::path(again) / "trace.csv") == slurp(fs::path(out) / "trace.csv"));
    CHECK(std::system((q + " run --preset nope > /dev/null 2>&1").c_str()) != 0);
    CHECK(std::system((q + " run > /dev/null 2>&1").c_str()) != 0);
}
