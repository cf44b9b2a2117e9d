#include "kecusp/run.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace kecusp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kecusp_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(KECUSP_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, PresetsValidate) {
    for (const auto& name : preset_names()) EXPECT_NO_THROW(validate(preset(name))) << name;
    EXPECT_THROW(preset("no-such-preset"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    for (const auto& name : preset_names()) {
        const RunConfig c = preset(name);
        EXPECT_EQ(parse_config(to_json(c)), c) << name;
        EXPECT_EQ(parse_config_text(to_json(c).dump()), c) << name;
    }
    RunConfig c = preset("cusp-exact");
    c.domain = {Reduction::polar2d_n1, -6, -1, 65, 16, std::nullopt};
    c.boundary.kind = BoundaryKind::custom;
    c.boundary.inner_samples.assign(16, 0.25);
    c.boundary.outer_samples.assign(16, 1.5);
    c.divisor = {{0.5, 1.0}, {0.25}, 2};
    c.analysis.second_domain = DomainSpec{Reduction::radial_n1, -9, -1, 33, std::nullopt, std::nullopt};
    c.lattice.p2 = {1, 2};
    EXPECT_EQ(parse_config(to_json(c)), c);
}

TEST(Config, UnknownKeysAndBadValuesNameTheField) {
    auto field_of = [](const std::string& text) {
        try {
            validate(parse_config_text(text));
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field_of(R"({"command": "solve", "bogus": 1})"), "bogus");
    EXPECT_EQ(field_of(R"({"command": "solve", "domain": {"t_mn": -3}})"), "domain.t_mn");
    EXPECT_EQ(field_of(R"({"command": "fly"})"), "command");
    EXPECT_EQ(field_of(R"({"command": "solve", "domain": {"t_min": -1, "t_max": -2}})"), "domain.t_min");
    EXPECT_EQ(field_of(R"({"command": "solve", "domain": {"t_max": 0.5}})"), "domain.t_max");
    EXPECT_EQ(field_of(R"({"command": "solve", "domain": {"reduction": "polar2d_n1"}})"), "domain.n_theta");
    EXPECT_EQ(field_of(R"({"command": "solve", "divisor": {"b": [2.0]}})"), "divisor");
    EXPECT_EQ(field_of(R"({"command": "solve", "density": {"kind": "cone_pole"}})"), "density.kind");
    EXPECT_EQ(field_of(R"({"command": "volume"})"), "analysis.t_cuts");
    EXPECT_EQ(field_of(R"({"command": "collapse", "lattice": {"d": 4}})"), "lattice");
    EXPECT_EQ(field_of(R"({"command": "solve")"), "<file>");
}

TEST(Run, SolveWritesArtifacts) {
    const fs::path dir = scratch("solve");
    const auto r = run(preset("cusp-exact"), dir.string());
    ASSERT_EQ(r.exit_code, exit_ok) << r.message;
    for (const char* f : {"phi.csv", "report.txt", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["version"], kVersion);
    EXPECT_EQ(manifest["command"], "solve");
    EXPECT_EQ(manifest["exit_code"], 0);
    EXPECT_TRUE(manifest["results"].contains("solve"));
    EXPECT_EQ(slurp(dir / "phi.csv").substr(0, 6), "t,phi\n");
}

TEST(Run, ConfigErrorExitsTwoAndNamesField) {
    RunConfig c = preset("cusp-exact");
    c.domain.t_min = 0.5;
    const fs::path dir = scratch("bad");
    const auto r = run(c, dir.string());
    EXPECT_EQ(r.exit_code, exit_config);
    EXPECT_NE(r.message.find("domain.t_min"), std::string::npos) << r.message;
    EXPECT_FALSE(fs::exists(dir / "phi.csv"));
}

TEST(Run, MismatchedGridsExitFour) {
    RunConfig c = preset("rigidity-pair");
    c.domain.n_t = 257;
    c.analysis.second_domain = DomainSpec{Reduction::radial_n1, c.domain.t_min, -1.0, 129, std::nullopt, std::nullopt};
    const fs::path dir = scratch("mismatch");
    const auto r = run(c, dir.string());
    EXPECT_EQ(r.exit_code, exit_diagnostic);
    EXPECT_NE(r.message.find("different grids"), std::string::npos) << r.message;
    EXPECT_TRUE(fs::exists(dir / "report.txt"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Run, SolverFailureExitsThree) {
    RunConfig c = preset("cusp-exact");
    c.solver.max_iter = 1;
    c.boundary.kind = BoundaryKind::constant;
    c.boundary.inner = 30.0;
    c.boundary.outer = -30.0;
    const auto r = run(c, scratch("nonconv").string());
    EXPECT_EQ(r.exit_code, exit_solver);
}

TEST(Run, RerunsAreBitIdentical) {
    for (const char* name : {"cusp-exact", "hilbert-collapse", "model-atlas"}) {
        const fs::path a = scratch(std::string("rep_a_") + name), b = scratch(std::string("rep_b_") + name);
        const auto ra = run(preset(name), a.string()), rb = run(preset(name), b.string());
        ASSERT_EQ(ra.exit_code, exit_ok) << name;
        ASSERT_EQ(ra.files, rb.files);
        for (const auto& f : ra.files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << name << '/' << f;
    }
}

TEST(Run, ThreadsDoNotChangeResults) {
    RunConfig c = preset("model-atlas");
    const fs::path a = scratch("thr1"), b = scratch("thr4");
    ASSERT_EQ(run(c, a.string()).exit_code, exit_ok);
    c.threads = 4;
    ASSERT_EQ(run(c, b.string()).exit_code, exit_ok);
    EXPECT_EQ(slurp(a / "models.csv"), slurp(b / "models.csv"));
}

TEST(Run, OutputDirectoryPrecedence) {
    RunConfig c = preset("hilbert-collapse");
    c.output_dir = scratch("from_config").string();
    const std::string env_dir = scratch("from_env").string(), flag_dir = scratch("from_flag").string();
    ::setenv("KECUSP_OUT_DIR", env_dir.c_str(), 1);
    EXPECT_EQ(resolve_output_dir(c, std::nullopt), env_dir);
    EXPECT_EQ(resolve_output_dir(c, flag_dir), flag_dir);
    ASSERT_EQ(run(c).exit_code, exit_ok);
    EXPECT_TRUE(fs::exists(fs::path(env_dir) / "collapse.csv"));
    ::unsetenv("KECUSP_OUT_DIR");
    EXPECT_EQ(resolve_output_dir(c, std::nullopt), c.output_dir);
}

TEST(Run, EveryCommandProducesItsArtifact) {
    struct Case {
        RunConfig cfg;
        const char* file;
    };
    RunConfig vol = preset("cusp-exact");
    vol.command = Command::volume;
    vol.analysis.t_cuts = {-4, -2, -1};
    RunConfig lel = preset("cone-exact");
    lel.command = Command::lelong;
    RunConfig dist = preset("cusp-exact");
    dist.command = Command::distance;
    RunConfig cont = preset("continuation-ladder");
    cont.schedule = ContinuationSchedule::halving(3);
    const std::vector<Case> cases = {{vol, "volume.csv"}, {lel, "phi.csv"}, {dist, "distance.csv"},
                                     {cont, "continuation.csv"}, {preset("model-atlas"), "models.csv"},
                                     {preset("hilbert-collapse"), "collapse.csv"}};
    for (const auto& c : cases) {
        const fs::path dir = scratch(std::string("cmd_") + c.file);
        const auto r = run(c.cfg, dir.string());
        EXPECT_EQ(r.exit_code, exit_ok) << to_string(c.cfg.command) << ": " << r.message;
        EXPECT_TRUE(fs::exists(dir / c.file)) << c.file;
    }
}

TEST(Run, RigidityReportsBothTraceOrderings) {
    RunConfig c = preset("rigidity-pair");
    c.domain.n_t = 2049;
    const fs::path dir = scratch("rig");
    ASSERT_EQ(run(c, dir.string()).exit_code, exit_ok);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_TRUE(m["results"].contains("trace"));
    EXPECT_TRUE(m["results"].contains("trace.reverse"));
    EXPECT_TRUE(m["results"]["trace.reverse"]["at_outer_end"].get<bool>());
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    EXPECT_EQ(run_cli("--preset hilbert-collapse --out " + dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "collapse.csv"));
    EXPECT_NE(run_cli("--preset nope"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("--config /nonexistent/file.json"), 2);
    const fs::path bad = scratch("cli_bad.json");
    std::ofstream(bad) << R"({"command": "solve", "domain": {"t_min": 1}})";
    EXPECT_EQ(run_cli("--config " + bad.string() + " --out " + scratch("cli_bad").string()), 2);
}
