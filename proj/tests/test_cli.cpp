#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string output;
};

/// Runs the CLI with `args`, capturing stdout and stderr.
Run cli(const std::string& args, const fs::path& dir) {
    const auto log = dir / "cli.log";
    const std::string cmd = std::string(QHSKEW_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("qhskew_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string out(const std::string& sub) const { return "--out " + (dir_ / sub).string(); }
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, ConstantsWritesManifest) {
    const auto r = cli("constants --samples 20000 --bmax 4 --threads 1 " + out("c"), dir_);
    ASSERT_EQ(r.code, 0) << r.output;
    const auto m = read_json(dir_ / "c" / "constants_manifest.json");
    EXPECT_EQ(m["manifest_schema_version"], 1);
    EXPECT_EQ(m["command"], "constants");
    EXPECT_NEAR(m["summary"]["sigma2_f"].get<double>(), 0.5, 1e-12);
    EXPECT_TRUE(fs::exists(dir_ / "c" / "constants.csv"));
}

TEST_F(Cli, CorrelationsCsvAndRerunFromManifest) {
    const auto r = cli("correlations --k 16,32,64,128 --samples 20000 --threads 1 " + out("a"), dir_);
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string csv = slurp(dir_ / "a" / "correlations.csv");
    std::istringstream lines(csv);
    std::string line;
    int count = 0;
    std::getline(lines, line);
    EXPECT_EQ(line.rfind("k,value,stderr", 0), 0u) << line;
    while (std::getline(lines, line))
        if (!line.empty()) ++count;
    EXPECT_EQ(count, 4);
    const auto m = read_json(dir_ / "a" / "correlations_manifest.json");
    EXPECT_TRUE(m["summary"].contains("fit"));

    // The manifest alone reproduces the run bit for bit.
    const auto again = cli("correlations --config " + (dir_ / "a" / "correlations_manifest.json").string() + " " +
                               out("b"),
                           dir_);
    ASSERT_EQ(again.code, 0) << again.output;
    EXPECT_EQ(slurp(dir_ / "b" / "correlations.csv"), csv);
}

TEST_F(Cli, JsonFormat) {
    const auto r = cli("correlations --k 16,32,64 --samples 5000 --format json --threads 1 " + out("j"), dir_);
    ASSERT_EQ(r.code, 0) << r.output;
    const auto doc = read_json(dir_ / "j" / "correlations.json");
    EXPECT_TRUE(doc.contains("tables"));
    EXPECT_TRUE(doc.contains("summary"));
    EXPECT_FALSE(fs::exists(dir_ / "j" / "correlations.csv"));
}

TEST_F(Cli, UsageErrorsExitTwo) {
    auto r = cli("correlations --no-such-flag", dir_);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("Usage"), std::string::npos) << r.output;
    r = cli("", dir_);
    EXPECT_EQ(r.code, 2);

    const auto bad = dir_ / "bad.json";
    std::ofstream(bad) << R"({"run": {"beta": 3}})";
    r = cli("lemmas --config " + bad.string(), dir_);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("run.beta"), std::string::npos) << r.output;
}

TEST_F(Cli, SelftestPasses) {
    const auto r = cli("selftest " + out("s"), dir_);
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(r.output.find("FAIL"), std::string::npos) << r.output;
}
