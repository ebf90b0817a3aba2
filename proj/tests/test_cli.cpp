#include "vmtu/data_io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir = fs::temp_directory_path() / "vmtu_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "spec.json") << R"({"count": 6, "size": 16, "family": "disks", "seed": 4, "test_fraction": 0.34})";
        ASSERT_EQ(run("gen --spec " + (dir / "spec.json").string() + " --out " + (dir / "data").string()), 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir); }

    static int run(const std::string& args)
    {
        const std::string cmd = std::string(VMTU_CLI_PATH) + " " + args + " > " + (dir / "out.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const fs::path& p)
    {
        std::ifstream is(p);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    static std::string p(const std::string& rel) { return (dir / rel).string(); }

    static inline fs::path dir;
};

const std::string kModel = " --channels 4,8 --blocks 2 --epochs 1 --eval-every 1";

}  // namespace

TEST_F(Cli, GenWritesManifestAndStamp)
{
    EXPECT_TRUE(fs::exists(dir / "data" / "manifest.jsonl"));
    const auto stamp = nlohmann::json::parse(slurp(dir / "data" / "stamp.json"));
    EXPECT_EQ(stamp.at("command"), "gen");
    EXPECT_EQ(stamp.at("seed"), 4);
    EXPECT_EQ(stamp.at("version"), "1.0.0");
}

TEST_F(Cli, ClassicalSolvers)
{
    EXPECT_EQ(run("segment-cv --image " + p("data/img_0000.pgm") + " --out " + p("cv/m.png") + " --iters 20 --gt " +
                  p("data/mask_0000.pgm")),
              0);
    EXPECT_TRUE(fs::exists(dir / "cv" / "m.png"));
    EXPECT_EQ(slurp(dir / "cv" / "m.trace.csv").rfind("iter,c1,c2,energy", 0), 0u);
    EXPECT_EQ(run("segment-ch --image " + p("data/img_0000.pgm") + " --out " + p("ch/m.pgm") +
                  " --outer 2 --inner 5 --stability " + p("ch/stab.csv")),
              0);
    EXPECT_EQ(slurp(dir / "ch" / "m.trace.csv").rfind("outer_iter,", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "ch" / "m.stamp.json"));
    EXPECT_EQ(slurp(dir / "ch" / "stab.csv").rfind("outer,step,", 0), 0u);
}

TEST_F(Cli, TrainEvalAndConfigReplay)
{
    ASSERT_EQ(run("train --manifest " + p("data/manifest.jsonl") + kModel + " --ckpt " + p("t/m.ckpt")), 0);
    EXPECT_TRUE(fs::exists(dir / "t" / "m.history.csv"));
    ASSERT_EQ(run("eval --manifest " + p("data/manifest.jsonl") + " --ckpt " + p("t/m.ckpt") + " --out " + p("t/ev.csv")), 0);
    const std::string ev = slurp(dir / "t" / "ev.csv");
    EXPECT_EQ(ev.rfind("image,paper_accuracy,pixel_accuracy,dice", 0), 0u);
    EXPECT_NE(ev.find("\nmean,"), std::string::npos);
    EXPECT_NE(ev.find("\nstd,"), std::string::npos);

    // replaying the stamp with a new output path reproduces the checkpoint
    ASSERT_EQ(run("train --config " + p("t/m.stamp.json") + " --ckpt " + p("t/replay.ckpt")), 0);
    EXPECT_EQ(slurp(dir / "t" / "m.ckpt"), slurp(dir / "t" / "replay.ckpt"));
    EXPECT_EQ(slurp(dir / "t" / "m.history.csv"), slurp(dir / "t" / "replay.history.csv"));

    // flags win over the config file
    ASSERT_EQ(run("train --config " + p("t/m.stamp.json") + " --blocks 1 --ckpt " + p("t/b1.ckpt")), 0);
    const auto stamp = nlohmann::json::parse(slurp(dir / "t" / "b1.stamp.json"));
    EXPECT_EQ(stamp.at("config").at("blocks"), "1");
    EXPECT_EQ(stamp.at("config").at("channels"), "4,8");
}

TEST_F(Cli, SweepAblateAndPanel)
{
    EXPECT_EQ(run("sweep --manifest " + p("data/manifest.jsonl") + kModel + " --axis M --values 1,2 --out " + p("s/sw.csv")), 0);
    EXPECT_EQ(slurp(dir / "s" / "sw.csv").rfind("M,epoch,", 0), 0u);
    EXPECT_EQ(run("ablate --what laplacian --manifest " + p("data/manifest.jsonl") + kModel + " --out " + p("s/ab.csv")), 0);
    EXPECT_NE(slurp(dir / "s" / "ab.csv").find("\nfdm,"), std::string::npos);
    EXPECT_EQ(run("panel --images " + p("data/img_0000.pgm") + "," + p("data/img_0001.pgm") + " --masks " +
                  p("data/mask_0000.pgm") + "," + p("data/mask_0001.pgm") + " --out " + p("s/panel.png")),
              0);
    const vmtu::ImageTensor panel = vmtu::read_image(dir / "s" / "panel.png");
    EXPECT_EQ(panel.width(), 16 * 2 + 2);
    EXPECT_EQ(panel.height(), 16 * 2 + 2);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run("train --ckpt " + p("u/m.ckpt")), 2);  // missing manifest
    EXPECT_EQ(run("train --manifest " + p("data/manifest.jsonl") + " --blocks 0 --ckpt " + p("u/m.ckpt")), 2);
    EXPECT_EQ(run("segment-ch --image " + p("data/img_0000.pgm") + " --out " + p("u/x.pgm") + " --scheme spectral"), 2);
    EXPECT_EQ(run("nosuchcommand"), 2);
    EXPECT_FALSE(fs::exists(dir / "u"));
    EXPECT_EQ(run("eval --manifest " + p("missing.jsonl") + " --ckpt " + p("t/m.ckpt") + " --out " + p("u/e.csv")), 4);
    EXPECT_EQ(run("segment-cv --image " + p("nope.png") + " --out " + p("u/x.png")), 4);
    EXPECT_EQ(run("train --manifest " + p("data/manifest.jsonl") + kModel + " --h 1 --tau 50 --ckpt " + p("u/d.ckpt")), 3);
    EXPECT_NE(slurp(dir / "out.txt").find("step"), std::string::npos);
}
