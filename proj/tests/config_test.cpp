// Run-configuration parsing: file syntax, overrides, strict unknown-key
// handling, canonical echo round trips, and the mode/trajectory adapters.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "outpaint/config.hpp"

using outpaint::RunConfig;

namespace {

void expect_config_error(const std::string& text) {
  RunConfig cfg;
  try {
    outpaint::parse_config_text(cfg, text, "test");
    FAIL() << "expected ConfigError for: " << text;
  } catch (const outpaint::Error& e) {
    EXPECT_EQ(e.kind(), outpaint::ErrorKind::ConfigError);
  }
}

}  // namespace

TEST(RunConfig, DefaultsValidate) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.train.model.image_side, 64);
  EXPECT_EQ(cfg.train.timesteps, 200);
  EXPECT_DOUBLE_EQ(cfg.multiple, 2.25);
  EXPECT_EQ(cfg.output_side, 192);
  EXPECT_DOUBLE_EQ(cfg.psnr_max, 2.0);
  EXPECT_DOUBLE_EQ(cfg.psnr_cutoff, 1000.0);
}

TEST(RunConfig, ParsesCommentsWhitespaceAndValues) {
  RunConfig cfg;
  const std::string text =
      "# a full-line comment\n"
      "  hidden_dim = 32   # trailing comment\n"
      "\n"
      "learning_rate=1e-3\n"
      "trajectory = ddpm\n"
      "copy_input = true\n"
      "multiples = 2.25, 5, 11.7\n"
      "anchor_region = 4, 8, 16, 24\n";
  outpaint::parse_config_text(cfg, text, "test");
  EXPECT_EQ(cfg.train.model.hidden_dim, 32);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 1e-3);
  EXPECT_EQ(cfg.trajectory, "ddpm");
  EXPECT_TRUE(cfg.copy_input);
  ASSERT_EQ(cfg.train.multiples.size(), 3u);
  EXPECT_DOUBLE_EQ(cfg.train.multiples[1], 5.0);
  EXPECT_EQ(cfg.anchor_region, (outpaint::CropRegion{4, 8, 16, 24}));
}

TEST(RunConfig, RejectsMalformedInput) {
  expect_config_error("unknown_key = 1\n");
  expect_config_error("hidden_dim\n");          // no '='
  expect_config_error("= 3\n");                 // empty key
  expect_config_error("hidden_dim = twelve\n"); // not an integer
  expect_config_error("learning_rate = fast\n");
  expect_config_error("copy_input = maybe\n");
  expect_config_error("anchor_region = 1,2,3\n");  // needs 4 fields
  expect_config_error("prediction_target = epsilon\n");
  expect_config_error("pe_variant = fourier\n");
  expect_config_error("crop_mode = random\n");
}

TEST(RunConfig, OverridesApplyOnTopOfFile) {
  RunConfig cfg;
  outpaint::parse_config_text(cfg, "hidden_dim = 32\nddim_steps = 10\n",
                              "file");
  outpaint::apply_config_entry(cfg, "ddim_steps", "7");
  EXPECT_EQ(cfg.train.model.hidden_dim, 32);
  EXPECT_EQ(cfg.ddim_steps, 7);
}

TEST(RunConfig, SerializedEchoRoundTrips) {
  RunConfig cfg;
  outpaint::parse_config_text(cfg,
                              "hidden_dim = 32\n"
                              "learning_rate = 0.00031415\n"
                              "explicit_regions = 1\n"
                              "anchor_region = 1,2,3,4\n"
                              "target_region = 0,0,10,12\n"
                              "data = synthetic:64\n",
                              "test");
  const std::string echo = outpaint::serialize_run_config(cfg);
  RunConfig back;
  outpaint::parse_config_text(back, echo, "echo");
  EXPECT_EQ(outpaint::serialize_run_config(back), echo);
  EXPECT_EQ(back.train.model.hidden_dim, 32);
  EXPECT_DOUBLE_EQ(back.train.learning_rate, 0.00031415);
  EXPECT_TRUE(back.explicit_regions);
  EXPECT_EQ(back.target_region, (outpaint::CropRegion{0, 0, 10, 12}));
  EXPECT_EQ(back.data, "synthetic:64");
}

TEST(RunConfig, EveryKeyInEchoIsReparsable) {
  // The canonical echo exercises the full schema; every line must parse.
  RunConfig cfg;
  const std::string echo = outpaint::serialize_run_config(cfg);
  int lines = 0;
  for (char c : echo) lines += c == '\n';
  EXPECT_GE(lines, 40);  // the schema is wide
  RunConfig back;
  EXPECT_NO_THROW(outpaint::parse_config_text(back, echo, "echo"));
}

TEST(RunConfig, ModeSelection) {
  RunConfig cfg;
  cfg.multiple = 5.0;
  cfg.output_side = 100;
  const auto mode = cfg.mode();
  const auto* mm = std::get_if<outpaint::MultipleMode>(&mode);
  ASSERT_NE(mm, nullptr);
  EXPECT_DOUBLE_EQ(mm->multiple, 5.0);

  cfg.explicit_regions = true;
  cfg.anchor_region = {2, 2, 8, 8};
  cfg.target_region = {0, 0, 16, 16};
  const auto mode2 = cfg.mode();
  const auto* em = std::get_if<outpaint::ExplicitMode>(&mode2);
  ASSERT_NE(em, nullptr);
  EXPECT_EQ(em->anchor, (outpaint::CropRegion{2, 2, 8, 8}));
}

TEST(RunConfig, TrajectoryEnumAndSampleConfig) {
  RunConfig cfg;
  EXPECT_EQ(cfg.trajectory_enum(), outpaint::Trajectory::ddim);
  cfg.trajectory = "ddpm";
  EXPECT_EQ(cfg.trajectory_enum(), outpaint::Trajectory::ddpm);
  cfg.trajectory = "euler";
  EXPECT_THROW(cfg.trajectory_enum(), outpaint::Error);

  cfg.trajectory = "ddim";
  cfg.ddim_steps = 9;
  cfg.copy_input = true;
  const outpaint::SampleConfig sc = cfg.sample_config();
  EXPECT_EQ(sc.trajectory, outpaint::Trajectory::ddim);
  EXPECT_EQ(sc.ddim_steps, 9);
  EXPECT_TRUE(sc.copy_input);
}

TEST(RunConfig, ValidateCatchesCrossFieldProblems) {
  RunConfig cfg;
  cfg.multiple = 0.5;
  EXPECT_THROW(cfg.validate(), outpaint::Error);
  cfg = RunConfig{};
  cfg.ddim_steps = 0;
  EXPECT_THROW(cfg.validate(), outpaint::Error);
  cfg = RunConfig{};
  cfg.psnr_max = 0.0;
  EXPECT_THROW(cfg.validate(), outpaint::Error);
  // Explicit regions bypass the multiple check.
  cfg = RunConfig{};
  cfg.explicit_regions = true;
  cfg.multiple = 0.5;
  cfg.anchor_region = {0, 0, 4, 4};
  cfg.target_region = {0, 0, 8, 8};
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, FileLoading) {
  const auto dir =
      std::filesystem::temp_directory_path() / "outpaint_config_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.cfg").string();
  {
    std::ofstream f(path);
    f << "hidden_dim = 64\nout_dir = /tmp/somewhere\n";
  }
  RunConfig cfg;
  outpaint::parse_config_file(cfg, path);
  EXPECT_EQ(cfg.train.model.hidden_dim, 64);
  EXPECT_EQ(cfg.out_dir, "/tmp/somewhere");

  RunConfig missing;
  try {
    outpaint::parse_config_file(missing, (dir / "absent.cfg").string());
    FAIL() << "expected IoFailure";
  } catch (const outpaint::Error& e) {
    EXPECT_EQ(e.kind(), outpaint::ErrorKind::IoFailure);
  }
  std::filesystem::remove_all(dir);
}
