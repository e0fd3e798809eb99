#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "canonica/cli/commands.hpp"
#include "canonica/kv.hpp"

namespace fs = std::filesystem;
using canonica::cli::run;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() / (std::string("canonica_cli_") + info->name());
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  fs::path small_clip(const std::string& name = "clip") {
    const fs::path dir = root / name;
    EXPECT_EQ(run({"synth", "--out", dir.string(), "--frames", "4", "--height", "16", "--width", "16"}), 0);
    return dir;
  }

  std::vector<std::string> tiny_train(const fs::path& clip, const fs::path& out) {
    return {"train", "--clip", clip.string(), "--out", out.string(), "--preset", "desk",
            "--iterations", "3", "--batch", "16", "--samples", "8", "--quiet"};
  }

  fs::path root;
};

}  // namespace

TEST_F(Cli, SynthDefaultLayout) {
  ASSERT_EQ(run({"synth", "--out", (root / "c").string()}), 0);
  EXPECT_TRUE(fs::exists(root / "c" / "frames" / "00000.ppm"));
  EXPECT_TRUE(fs::exists(root / "c" / "frames" / "00007.ppm"));
  EXPECT_FALSE(fs::exists(root / "c" / "frames" / "00008.ppm"));
  EXPECT_TRUE(fs::is_directory(root / "c" / "flows"));
  EXPECT_TRUE(fs::is_directory(root / "c" / "masks"));
  EXPECT_TRUE(fs::exists(root / "c" / "tracks" / "gt_tracks.trk"));
  EXPECT_TRUE(fs::exists(root / "c" / "run.cfg"));
}

TEST_F(Cli, SynthFrameCountAndDeterminism) {
  ASSERT_EQ(run({"synth", "--out", (root / "a").string(), "--frames", "80", "--height", "8",
                 "--width", "8", "--pair-window", "1"}),
            0);
  EXPECT_TRUE(fs::exists(root / "a" / "frames" / "00079.ppm"));
  ASSERT_EQ(run({"synth", "--out", (root / "b").string(), "--frames", "80", "--height", "8",
                 "--width", "8", "--pair-window", "1"}),
            0);
  for (const char* f : {"frames/00042.ppm", "tracks/gt_tracks.trk"}) {
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  }
}

TEST_F(Cli, SynthRefusesNonEmptyDirectoryUnlessForced) {
  small_clip("c");
  EXPECT_EQ(run({"synth", "--out", (root / "c").string()}), 2);
  EXPECT_EQ(run({"synth", "--out", (root / "c").string(), "--force"}), 0);
}

TEST_F(Cli, UnknownFlagAndMissingOutAreConfigErrors) {
  EXPECT_EQ(run({"synth", "--bogus", "1"}), 2);
  EXPECT_EQ(run({"synth"}), 2);
  EXPECT_EQ(run({"train", "--clip", (root / "nowhere").string(), "--preset", "fast",
                 "--out", (root / "o").string()}),
            2);
}

TEST_F(Cli, TrainZeroIterationsWritesInitialCheckpoint) {
  const fs::path clip = small_clip();
  auto args = tiny_train(clip, root / "run");
  args[8] = "0";
  ASSERT_EQ(run(args), 0);
  EXPECT_TRUE(fs::exists(root / "run" / "checkpoint.ckpt"));
  EXPECT_EQ(lines_of(root / "run" / "loss.csv").size(), 1u);
}

TEST_F(Cli, TrainWithoutFlowsIsDataError) {
  const fs::path clip = small_clip();
  fs::remove_all(clip / "flows");
  testing::internal::CaptureStderr();
  EXPECT_EQ(run(tiny_train(clip, root / "run")), 3);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("canonica synth"), std::string::npos) << err;
}

TEST_F(Cli, TrainEchoesResolvedConfig) {
  const fs::path clip = small_clip();
  auto args = tiny_train(clip, root / "run");
  args.insert(args.end(), {"--w-class", "10", "--log-every", "1"});
  ASSERT_EQ(run(args), 0);
  const auto cfg = canonica::KeyValues::load(root / "run" / "run.cfg");
  EXPECT_EQ(cfg.get_string("run.command", ""), "train");
  EXPECT_EQ(cfg.get_double("train.w_class", 0.0), 10.0);
  EXPECT_EQ(cfg.get_int("train.iterations", 0), 3);
  EXPECT_EQ(lines_of(root / "run" / "loss.csv").size(), 4u);
}

TEST_F(Cli, RerunFromEchoedConfigIsByteIdentical) {
  const fs::path clip = small_clip();
  ASSERT_EQ(run(tiny_train(clip, root / "first")), 0);
  ASSERT_EQ(run({"train", "--config", (root / "first" / "run.cfg").string(), "--out",
                 (root / "second").string(), "--quiet"}),
            0);
  EXPECT_EQ(slurp(root / "first" / "checkpoint.ckpt"), slurp(root / "second" / "checkpoint.ckpt"));
  EXPECT_EQ(slurp(root / "first" / "loss.csv"), slurp(root / "second" / "loss.csv"));
}

TEST_F(Cli, TrackWritesTracksAndReportsMissingLabel) {
  const fs::path clip = small_clip();
  ASSERT_EQ(run(tiny_train(clip, root / "run")), 0);
  const std::string ckpt = (root / "run" / "checkpoint.ckpt").string();
  ASSERT_EQ(run({"track", "--checkpoint", ckpt, "--clip", clip.string(), "--label", "sprite0",
                 "--samples", "8", "--out", (root / "trk").string()}),
            0);
  EXPECT_EQ(lines_of(root / "trk" / "tracks.csv")[0], "track_id,frame,row,col,x,y,z,in_bounds");
  EXPECT_TRUE(fs::exists(root / "trk" / "overlays" / "00003.ppm"));
  EXPECT_TRUE(fs::exists(root / "trk" / "accuracy.csv"));

  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"track", "--checkpoint", ckpt, "--clip", clip.string(), "--label", "ghost",
                 "--out", (root / "trk2").string()}),
            3);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("sprite0"), std::string::npos) << err;
}

TEST_F(Cli, DepthWithoutGroundTruthWritesNoMetrics) {
  const fs::path clip = small_clip();
  ASSERT_EQ(run(tiny_train(clip, root / "run")), 0);
  fs::remove_all(clip / "depth");
  ASSERT_EQ(run({"depth", "--checkpoint", (root / "run" / "checkpoint.ckpt").string(), "--clip",
                 clip.string(), "--samples", "8", "--out", (root / "d").string()}),
            0);
  EXPECT_TRUE(fs::exists(root / "d" / "depth" / "00000.f32"));
  EXPECT_EQ(fs::file_size(root / "d" / "depth" / "00000.f32") >= 16u * 16u * 4u, true);
  EXPECT_FALSE(fs::exists(root / "d" / "depth_metrics.csv"));
}

TEST_F(Cli, DepthWithGroundTruthWritesMetrics) {
  const fs::path clip = small_clip();
  ASSERT_EQ(run(tiny_train(clip, root / "run")), 0);
  ASSERT_EQ(run({"depth", "--checkpoint", (root / "run" / "checkpoint.ckpt").string(), "--clip",
                 clip.string(), "--samples", "8", "--out", (root / "d").string()}),
            0);
  const auto lines = lines_of(root / "d" / "depth_metrics.csv");
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "video,frame,MAE,AbsRel,delta125,s,t");
}

TEST_F(Cli, EvalSinglePairGivesOneRowPerLabel) {
  const fs::path clip = small_clip();
  ASSERT_EQ(run(tiny_train(clip, root / "run")), 0);
  ASSERT_EQ(run({"eval", "--checkpoint", (root / "run" / "checkpoint.ckpt").string(), "--clip",
                 clip.string(), "--label", "sprite0", "--out", (root / "e").string()}),
            0);
  const auto rows = lines_of(root / "e" / "tracking.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "video,label,frames,mean_acc,median_epe");
  EXPECT_EQ(lines_of(root / "e" / "tracking_summary.csv").size(), 2u);
}
