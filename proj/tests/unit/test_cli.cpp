#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pqproj/catalog.hpp"
#include "pqproj/cli/run.hpp"
#include "pqproj/cli/scene_io.hpp"

namespace fs = std::filesystem;
using namespace pqproj;
using namespace pqproj::cli;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

Json without_wall_clock(const std::string& text) {
    Json j = Json::parse(text);
    j.erase("wall_clock");
    return j;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("pqproj_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string scene(const std::string& name, std::vector<std::string> extra = {}) {
        const std::string path = (dir_ / (name + ".json")).string();
        std::vector<std::string> args{"catalog", name, "--out", path};
        args.insert(args.end(), extra.begin(), extra.end());
        const Outcome o = invoke(args);
        EXPECT_EQ(o.code, 0) << o.err;
        return path;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, CatalogListsEntries) {
    const Outcome o = invoke({"catalog", "--list"});
    EXPECT_EQ(o.code, 0);
    for (const char* n : {"affine", "dini", "sphere", "cp1", "dini_corrupted", "cp1_even_eps", "eps_one"})
        EXPECT_NE(o.out.find(n), std::string::npos) << n;
}

TEST_F(Cli, ValidSceneCommandsPass) {
    const std::string dini = scene("dini");
    EXPECT_EQ(invoke({"validate", dini}).code, 0);
    const Outcome r = invoke({"residuals", dini, "--eq", "projective", "--samples", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["command"], "residuals");
    EXPECT_EQ(j["exit_code"], 0);
    EXPECT_LE(j["results"]["max_relative"].get<double>(), 1e-7);
    EXPECT_EQ(j["scene"]["digest"], scene_digest(read_scene_file(dini)));
}

TEST_F(Cli, ClassifyReportsVerdict) {
    const Outcome d = invoke({"classify", scene("dini"), "--samples", "200"});
    ASSERT_EQ(d.code, 0) << d.err;
    EXPECT_EQ(Json::parse(d.out)["verdict"], "projective_eps0");
    const Outcome c = invoke({"classify", scene("cp1"), "--samples", "200"});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(Json::parse(c.out)["verdict"], "pq_eps_class(-1)");
}

TEST_F(Cli, NegativeControlsExitOne) {
    for (const char* name : {"dini_corrupted", "cp1_even_eps"}) {
        const Outcome o = invoke({"residuals", scene(name), "--eq", "main", "--samples", "200"});
        EXPECT_EQ(o.code, 1) << name;
        const Json j = Json::parse(o.out);
        EXPECT_GT(j["results"]["max_relative"].get<double>(), 1e-3);
        EXPECT_FALSE(j["results"]["passed"].get<bool>());
    }
}

TEST_F(Cli, ExcludedEpsilonExitsTwo) {
    const std::string path = std::string(PQPROJ_TEST_DATA_DIR) + "/eps_one.json";
    for (const char* cmd : {"validate", "residuals", "classify"}) {
        const Outcome o = invoke({cmd, path});
        EXPECT_EQ(o.code, 2) << cmd;
        EXPECT_NE(o.err.find("epsilon must differ from 1 and m+1 = 3 (got 1)"), std::string::npos) << o.err;
    }
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    const std::string dini = scene("dini");
    EXPECT_EQ(invoke({"residuals", dini, "--bogus"}).code, 2);
    EXPECT_EQ(invoke({"residuals", dini, "--eq", "nonsense"}).code, 2);
    EXPECT_EQ(invoke({"residuals", (dir_ / "missing.json").string()}).code, 2);
    EXPECT_EQ(invoke({"brackets", dini, "--pairs", "1-2"}).code, 2);
    EXPECT_EQ(invoke({"catalog", "nonsense"}).code, 2);
    EXPECT_EQ(invoke({"catalog", "cp1", "--lambda", "0.5", "--out", "-"}).code, 2);
    std::ofstream(dir_ / "broken.json") << "{ not json";
    EXPECT_EQ(invoke({"validate", (dir_ / "broken.json").string()}).code, 2);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(Cli, ReportsAreDeterministicApartFromWallClock) {
    const std::string dini = scene("dini");
    const std::vector<std::string> args{"spectrum", dini, "--samples", "100", "--seed", "9"};
    const Outcome a = invoke(args), b = invoke(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(without_wall_clock(a.out), without_wall_clock(b.out));
    EXPECT_TRUE(Json::parse(a.out).contains("wall_clock"));
    EXPECT_EQ(Json::parse(a.out)["seed"], 9);
}

TEST_F(Cli, SceneFilesRoundTrip) {
    for (const char* name : {"affine", "dini", "sphere", "cp1", "dini_corrupted", "cp1_even_eps", "eps_one"}) {
        const std::string path = scene(name);
        const std::string text = slurp(path);
        const SceneSpec spec = parse_scene(text);
        EXPECT_EQ(serialize_scene(spec), text) << name;
        EXPECT_EQ(scene_digest(spec), scene_digest(parse_scene(serialize_scene(spec))));
    }
    // The emitted scene is the catalog scene.
    EXPECT_EQ(scene_digest(read_scene_file(scene("dini"))), scene_digest(make_dini_pair().scene.spec()));
}

TEST_F(Cli, CatalogParametersReachTheScene) {
    const SceneSpec s = read_scene_file(scene("affine", {"--m", "3", "--c", "2"}));
    EXPECT_EQ(s.dimension(), 3);
    EXPECT_EQ(invoke({"classify", scene("sphere", {"--C", "2,0,0,0,2,0,0,0,2"}), "--samples", "100"}).code, 0);
}

TEST_F(Cli, GeodesicCsvAndAtomicOutputs) {
    const std::string dini = scene("dini");
    const std::string csv = (dir_ / "traj.csv").string();
    const std::string report = (dir_ / "report.json").string();
    const Outcome o = invoke({"geodesic", dini, "--x0", "0.5,1.5", "--v0", "0.3,0.2", "--T", "0.1", "--h", "0.01",
                              "--t", "0.5,2.5", "--csv", csv, "--out", report});
    ASSERT_EQ(o.code, 0) << o.err;
    const std::string text = slurp(csv);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,x1,x2,v1,v2,F_t1,F_t2");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 12);
    EXPECT_EQ(Json::parse(slurp(report))["command"], "geodesic");
    for (const auto& entry : fs::directory_iterator(dir_)) EXPECT_NE(entry.path().extension(), ".tmp");
}

TEST_F(Cli, IntegralsAndBrackets) {
    const std::string dini = scene("dini");
    const Outcome i = invoke({"integrals", dini, "--x0", "0.5,1.5", "--v0", "0.3,0.2", "--t", "0.5,2.5,5,-1,6"});
    ASSERT_EQ(i.code, 0) << i.err;
    EXPECT_TRUE(Json::parse(i.out)["passed"].get<bool>());
    const Outcome b = invoke({"brackets", dini, "--pairs", "0.5:2.5,2.5:2.5", "--phase-samples", "20"});
    ASSERT_EQ(b.code, 0) << b.err;
    const Outcome p = invoke({"integrals", dini, "--x0", "0.3,1.5", "--v0", "0.4,0.1", "--regularized", "3.5,1",
                              "--probe"});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_TRUE(Json::parse(p.out).contains("probe"));
}
