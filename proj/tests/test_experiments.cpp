#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rotadic/error.hpp"
#include "rotadic/experiments.hpp"
#include "rotadic/report.hpp"

using namespace rotadic;
using namespace rotadic::experiments;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("rotadic_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string parse_message(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rotadic");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kValidate = R"({"scenario": "validate", "seed": 3, "group": {"family": "G1", "a": 0.5},
                            "sampling": {"samples": 200}})";

const char* kSmallCz = R"({"scenario": "cz", "seed": 2, "group": {"family": "G1", "a": 1.0},
                           "sampling": {"cases": 4, "grid": {"lower": -4, "upper": 4, "count": 17},
                                        "engulfing": 7.5, "tall_gaussian": false}})";

} // namespace

TEST(Config, ParsesValidate) {
    const ScenarioConfig c = parse_config(kValidate);
    EXPECT_EQ(c.scenario, Scenario::Validate);
    EXPECT_EQ(c.seed, 3u);
    EXPECT_EQ(c.group.family, Family::G1);
    EXPECT_DOUBLE_EQ(c.group.a, 0.5);
    EXPECT_EQ(c.validate.samples, 200u);
}

TEST(Config, ParsesNestedBlocks) {
    const ScenarioConfig c = parse_config(R"({"scenario": "operator", "seed": 1, "group": {"family": "ParabolicR2"},
        "grid": {"lower": [-4, -2], "upper": [4, 2], "count": [33, 17]},
        "quadrature": {"t_lower": 0.01, "t_upper": 100, "nodes_per_decade": 8},
        "sampling": {"p_list": [1.5], "width_log2": [0, 1], "check_stability": false},
        "bounds": {"operator.l2_ratio": 30}})");
    ASSERT_TRUE(c.grid.has_value());
    EXPECT_EQ(c.grid->counts()[1], 17u);
    EXPECT_DOUBLE_EQ(c.quadrature.t_lower, 0.01);
    EXPECT_EQ(c.op.bounds_config.p_list, std::vector<double>{1.5});
    EXPECT_FALSE(c.op.bounds_config.check_stability);
    EXPECT_FALSE(c.op.l2.check_stability);
    EXPECT_DOUBLE_EQ(c.bounds.at("operator.l2_ratio"), 30.0);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_NE(parse_message("").find("empty"), std::string::npos);
    EXPECT_NE(parse_message("{\"scenario\": \"validate\",\n \"seed\": }").find("line 2"), std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "validate", "group": {"family": "G1"}})").find("'seed'"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "bogus", "seed": 1, "group": {"family": "G1"}})").find("'scenario'"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "validate", "seed": 1, "group": {"family": "G1"},
                               "sampling": {"samples": "many"}})")
                  .find("'sampling.samples'"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "validate", "seed": 1, "group": {"family": "G1", "colour": 1}})")
                  .find("'group.colour': unknown field"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "geometry", "seed": 1, "group": {"family": "G1"},
                               "sampling": {"log2_radius_min": 2, "log2_radius_max": 1}})")
                  .find("empty range"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "kernel", "seed": 1, "group": {"family": "ParabolicR2"},
                               "psi": {"kind": "compact"}})")
                  .find("needs G1"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "kernel", "seed": 1, "group": {"family": "G1"},
                               "sampling": {"checks": ["pointwise", "nope"]}})")
                  .find("'sampling.checks[1]'"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "operator", "seed": 1, "group": {"family": "G1"},
                               "quadrature": {"t_lower": 10, "t_upper": 1}})")
                  .find("quadrature"),
              std::string::npos);
    EXPECT_NE(parse_message(R"({"scenario": "validate", "seed": -1, "group": {"family": "G1"}})").find("'seed'"),
              std::string::npos);
}

TEST(Config, FrozenBounds) {
    EXPECT_EQ(frozen_bound("geometry.doubling_constant", Family::G1), 8.0);
    EXPECT_EQ(frozen_bound("cz.max_reconstruction_error", Family::HeisenbergH2), 1e-10);
    EXPECT_FALSE(frozen_bound("kernel.pointwise_constant", Family::HeisenbergH2).has_value());
    EXPECT_FALSE(frozen_bound("no.such.check", Family::ParabolicR2).has_value());
}

TEST(Run, ValidateWritesListedArtifacts) {
    const auto dir = scratch("validate");
    RunOptions opts;
    opts.output = dir;
    const RunManifest m = run_scenario(parse_config(kValidate), opts);
    EXPECT_TRUE(m.passed());
    for (const auto& f : m.artifacts) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, m.artifacts.size());
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["config"]["seed"], 3);
    EXPECT_EQ(manifest["version"], std::string(kToolVersion));
    EXPECT_TRUE(manifest["passed"].get<bool>());
}

TEST(Run, RerunIsByteIdentical) {
    for (const char* text : {kValidate, kSmallCz}) {
        const auto a = scratch("rerun_a");
        const auto b = scratch("rerun_b");
        RunOptions oa;
        oa.output = a;
        oa.threads = 1;
        RunOptions ob = oa;
        ob.output = b;
        ob.threads = 2;
        const RunManifest ma = run_scenario(parse_config(text), oa);
        const RunManifest mb = run_scenario(parse_config(text), ob);
        ASSERT_EQ(ma.artifacts, mb.artifacts);
        for (const auto& f : ma.artifacts) {
            if (f != "manifest.json") {
                EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
            }
        }
    }
}

TEST(Run, SeedOverrideChangesSamples) {
    const auto a = scratch("seed_a");
    const auto b = scratch("seed_b");
    RunOptions oa;
    oa.output = a;
    RunOptions ob;
    ob.output = b;
    ob.seed = 99;
    (void)run_scenario(parse_config(kSmallCz), oa);
    const RunManifest mb = run_scenario(parse_config(kSmallCz), ob);
    EXPECT_NE(slurp(a / "cz_suite.csv"), slurp(b / "cz_suite.csv"));
    EXPECT_EQ(mb.config["seed"], 99);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    const std::string good = write("good.json", kValidate);
    const std::string empty = write("empty.json", "");
    std::string failing = kValidate;
    failing.insert(failing.rfind('}'), R"(, "bounds": {"structure.identity": -1})");
    const std::string fail = write("fail.json", failing);

    EXPECT_EQ(cli({"validate", "--config", good, "--out", (dir / "o1").string()}), 0);
    EXPECT_EQ(cli({"validate", "--config", fail, "--out", (dir / "o2").string()}), 1);
    EXPECT_EQ(cli({"validate", "--config", empty}), 2);
    EXPECT_EQ(cli({"validate", "--config", (dir / "missing.json").string()}), 2);
    EXPECT_EQ(cli({"cz", "--config", good}), 2);
    EXPECT_EQ(cli({"validate"}), 2);
    EXPECT_EQ(cli({"unknown", "--config", good}), 2);
}

TEST(Table, QuotesFieldsWithSeparators) {
    Table t({"a", "note"});
    t.add_row({1.5, std::string("x, y")});
    t.add_row({2.0, std::string("say \"hi\"")});
    EXPECT_EQ(t.to_csv(), "a,note\n1.5,\"x, y\"\n2,\"say \"\"hi\"\"\"\n");
}
