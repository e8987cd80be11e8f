#include "relaxkv/cli.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace relaxkv {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        m_dir = fs::temp_directory_path() /
                ("relaxkv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(m_dir);
        fs::create_directories(m_dir);
    }
    void TearDown() override { fs::remove_all(m_dir); }

    int run(std::vector<std::string> args)
    {
        m_out.str("");
        m_err.str("");
        return cli::run(args, m_out, m_err);
    }

    std::vector<std::string> quick(std::vector<std::string> args, const std::string& out_name = "out")
    {
        args.insert(args.end(), {"--out", (m_dir / out_name).string(), "--set", "rollout.total_frames=30",
                                 "--set", "model.tokens_per_frame=4", "--set", "metrics.clip_chunks=2"});
        return args;
    }

    static std::string slurp(const fs::path& p)
    {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    nlohmann::json error_json() const { return nlohmann::json::parse(m_err.str()); }

    fs::path m_dir;
    std::ostringstream m_out;
    std::ostringstream m_err;
};

TEST_F(Cli, RolloutWritesJsonReport)
{
    ASSERT_EQ(run(quick({"rollout", "--seed", "3"})), cli::kExitOk) << m_err.str();
    const auto path = m_dir / "out" / "rollout.json";
    EXPECT_EQ(m_out.str(), path.string() + "\n");
    const auto j = nlohmann::json::parse(slurp(path));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["kind"], "rollout");
    EXPECT_EQ(j["config"]["rollout.seed"], "3");
    EXPECT_EQ(j["steps"].size(), 10u);
    EXPECT_EQ(j["steps"][5]["cost"]["attended_frames"], 7);
    EXPECT_EQ(j["summary"]["cost_ratio"], 3.0);
    EXPECT_TRUE(j["metrics"]["drift"].is_number());
    EXPECT_TRUE(j["metrics"]["balance"].is_null());
}

TEST_F(Cli, RolloutCsv)
{
    ASSERT_EQ(run(quick({"rollout", "--seed", "3", "--format", "csv"})), cli::kExitOk) << m_err.str();
    const auto text = slurp(m_dir / "out" / "rollout.csv");
    EXPECT_EQ(text.rfind("# schema_version=1\n# kind=rollout\n", 0), 0u);
    EXPECT_NE(text.find("step,first_frame,warmup,sink,history,tail,pool,attended_frames"), std::string::npos);
}

TEST_F(Cli, ProfileReportsCostRatio)
{
    ASSERT_EQ(run(quick({"profile", "--seed", "1", "--format", "json"})), cli::kExitOk) << m_err.str();
    const auto j = nlohmann::json::parse(slurp(m_dir / "out" / "profile.json"));
    EXPECT_EQ(j["summary"]["peak_attended_frames"], 7);
    EXPECT_EQ(j["summary"]["baseline_attended_frames"], 21);
    EXPECT_EQ(j["summary"]["cost_ratio"], 3.0);
    EXPECT_EQ(j["steps"].size(), 10u);
}

TEST_F(Cli, SweepOneRowPerGridPoint)
{
    ASSERT_EQ(run(quick({"sweep", "--seed", "2", "--set", "sweep.sink=0,1", "--set", "sweep.tail=1,2"})),
              cli::kExitOk)
        << m_err.str();
    const auto text = slurp(m_dir / "out" / "sweep.csv");
    std::istringstream is(text);
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#' && line.rfind("policy,", 0) != 0) {
            ++rows;
            EXPECT_NE(line.find(",ok,"), std::string::npos) << line;
        }
    }
    EXPECT_EQ(rows, 4);
}

TEST_F(Cli, CompareIsByteIdenticalAcrossRuns)
{
    const auto args_a = quick({"compare", "--seed", "5", "--policies", "dense_window,relaxed"}, "a");
    const auto args_b = quick({"compare", "--seed", "5", "--policies", "dense_window,relaxed"}, "b");
    ASSERT_EQ(run(args_a), cli::kExitOk) << m_err.str();
    ASSERT_EQ(run(args_b), cli::kExitOk) << m_err.str();
    const auto a = slurp(m_dir / "a" / "compare.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(m_dir / "b" / "compare.csv"));
}

TEST_F(Cli, CompareJsonRows)
{
    ASSERT_EQ(run(quick({"compare", "--seed", "5", "--format", "json", "--policies", "relaxed,relaxed"})),
              cli::kExitOk);
    const auto j = nlohmann::json::parse(slurp(m_dir / "out" / "compare.json"));
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["rows"][0]["drift"], j["rows"][1]["drift"]);
    EXPECT_EQ(j["rows"][0]["balance"], 0.0);
    EXPECT_EQ(j["rows"][1]["balance"], 0.0);
}

TEST_F(Cli, ConfigFileSuppliesSeed)
{
    const auto ini = m_dir / "run.ini";
    std::ofstream(ini) << "[rollout]\nseed = 4\n";
    ASSERT_EQ(run(quick({"profile", "--config", ini.string()})), cli::kExitOk) << m_err.str();
}

TEST_F(Cli, ConfigErrorsExitTwo)
{
    EXPECT_EQ(run(quick({"rollout"})), cli::kExitConfig);
    EXPECT_EQ(error_json()["error"]["kind"], "config");
    EXPECT_NE(error_json()["error"]["message"].get<std::string>().find("seed"), std::string::npos);

    auto uneven = quick({"rollout", "--seed", "1"});
    uneven.insert(uneven.end(), {"--set", "rollout.total_frames=31"});
    EXPECT_EQ(run(uneven), cli::kExitConfig);
    EXPECT_EQ(run(quick({"sweep", "--seed", "1", "--set", "sweep.sink=0,1", "--set", "sweep.memory.n_sink=2"})),
              cli::kExitConfig);
    EXPECT_NE(error_json()["error"]["message"].get<std::string>().find("conflicting grid keys"),
              std::string::npos);
    EXPECT_EQ(run(quick({"sweep", "--seed", "1"})), cli::kExitConfig);
    EXPECT_EQ(run(quick({"compare", "--seed", "1", "--policies", "relaxed"})), cli::kExitConfig);
    EXPECT_EQ(run(quick({"compare", "--seed", "1", "--policies", "relaxed,bogus"})), cli::kExitConfig);
    EXPECT_EQ(run(quick({"rollout", "--seed", "1", "--format", "xml"})), cli::kExitConfig);
    EXPECT_EQ(run({"explode"}), cli::kExitConfig);
    EXPECT_EQ(run({}), cli::kExitConfig);
    EXPECT_EQ(run(quick({"rollout", "--seed", "1", "--config", (m_dir / "nope.ini").string()})), cli::kExitConfig);
}

TEST_F(Cli, UnwritableOutputExitsOne)
{
    const auto blocker = m_dir / "file";
    std::ofstream(blocker) << "x";
    EXPECT_EQ(run({"profile", "--seed", "1", "--out", (blocker / "sub").string()}), cli::kExitIo);
    EXPECT_EQ(error_json()["error"]["kind"], "io");
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}), cli::kExitOk); }

}  // namespace
}  // namespace relaxkv
