#include "outpaint/geometry.hpp"

#include <gtest/gtest.h>

using outpaint::CropPair;
using outpaint::CropRegion;
using outpaint::Error;
using outpaint::ErrorKind;
using outpaint::ExplicitMode;
using outpaint::MultipleMode;
using outpaint::RegionPair;
using outpaint::Rng;
using outpaint::ScaleRange;

TEST(CropSampler, FullScaleSquareIsTheWholeImage) {
  Rng rng(0);
  bool fallback = true;
  const CropRegion r = outpaint::sample_resized_crop(
      192, 192, ScaleRange{1.0, 1.0}, ScaleRange{1.0, 1.0}, rng, &fallback);
  EXPECT_EQ(r, (CropRegion{0, 0, 192, 192}));
  EXPECT_FALSE(fallback);
}

TEST(CropSampler, QuarterAreaSquareIsDeterministicPerSeed) {
  CropRegion first{};
  for (int trial = 0; trial < 3; ++trial) {
    Rng rng(42);
    const CropRegion r = outpaint::sample_resized_crop(
        64, 64, ScaleRange{0.25, 0.25}, ScaleRange{1.0, 1.0}, rng);
    EXPECT_EQ(r.height, 32);
    EXPECT_EQ(r.width, 32);
    if (trial == 0) first = r;
    EXPECT_EQ(r, first);
  }
}

TEST(CropSampler, PostConditionsHoldOverManyDraws) {
  Rng rng(1234);
  const ScaleRange scale{0.08, 1.0};
  const ScaleRange aspect{0.75, 4.0 / 3.0};
  const int H = 64, W = 48;
  for (int i = 0; i < 1000; ++i) {
    bool fallback = false;
    const CropRegion r =
        outpaint::sample_resized_crop(H, W, scale, aspect, rng, &fallback);
    ASSERT_TRUE(r.inside(H, W));
    const double frac = static_cast<double>(r.height) * r.width / (H * W);
    const double ar = static_cast<double>(r.width) / r.height;
    EXPECT_GE(frac, scale.lo);
    EXPECT_LE(frac, scale.hi);
    EXPECT_GE(ar, aspect.lo);
    EXPECT_LE(ar, aspect.hi);
  }
}

// A configuration where random attempts often miss the (very tight) area
// window but the centered fallback hits it exactly: some seed below 200
// must trigger the fallback, and the fallback must be the centered square.
TEST(CropSampler, FallbackIsCenteredAndFlagged) {
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    Rng rng(seed);
    bool fallback = false;
    const CropRegion r = outpaint::sample_resized_crop(
        16, 16, ScaleRange{0.25, 0.2501}, ScaleRange{0.3, 10.0 / 3.0}, rng,
        &fallback);
    if (!fallback) continue;
    found = true;
    EXPECT_EQ(r, (CropRegion{4, 4, 8, 8}));
  }
  EXPECT_TRUE(found);
}

TEST(CropSampler, ThrowsWhenEvenFallbackCannotFit) {
  Rng rng(0);
  // 1x1 is the smallest integer crop; its area fraction 1/256 still
  // overshoots the requested ceiling, so nothing is admissible.
  EXPECT_THROW(
      {
        try {
          outpaint::sample_resized_crop(16, 16, ScaleRange{0.001, 0.0012},
                                        ScaleRange{1.0, 1.0}, rng);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::UnsatisfiableCrop);
          throw;
        }
      },
      Error);
}

TEST(CropSampler, RejectsBadRanges) {
  Rng rng(0);
  EXPECT_THROW(outpaint::sample_resized_crop(32, 32, ScaleRange{0.0, 0.5},
                                             ScaleRange{1, 1}, rng),
               Error);
  EXPECT_THROW(outpaint::sample_resized_crop(32, 32, ScaleRange{0.5, 0.2},
                                             ScaleRange{1, 1}, rng),
               Error);
  EXPECT_THROW(outpaint::sample_resized_crop(32, 32, ScaleRange{0.5, 1.5},
                                             ScaleRange{1, 1}, rng),
               Error);
  EXPECT_THROW(outpaint::sample_resized_crop(32, 32, ScaleRange{0.2, 0.5},
                                             ScaleRange{-1, 1}, rng),
               Error);
  EXPECT_THROW(outpaint::sample_resized_crop(0, 32, ScaleRange{0.2, 0.5},
                                             ScaleRange{1, 1}, rng),
               Error);
}

TEST(CropPairSampler, AnchorDrawnFirstAndDeterministic) {
  Rng a(7), b(7);
  const CropPair p1 = outpaint::sample_crop_pair(
      64, 64, ScaleRange{0.2, 0.5}, ScaleRange{0.6, 1.0},
      ScaleRange{0.75, 4.0 / 3.0}, a);
  // Reproducing the anchor draw alone from the same seed must give the
  // same anchor region (anchor consumes the stream first).
  const CropRegion anchor_only = outpaint::sample_resized_crop(
      64, 64, ScaleRange{0.2, 0.5}, ScaleRange{0.75, 4.0 / 3.0}, b);
  EXPECT_EQ(p1.anchor, anchor_only);

  Rng c(7);
  const CropPair p2 = outpaint::sample_crop_pair(
      64, 64, ScaleRange{0.2, 0.5}, ScaleRange{0.6, 1.0},
      ScaleRange{0.75, 4.0 / 3.0}, c);
  EXPECT_EQ(p1.anchor, p2.anchor);
  EXPECT_EQ(p1.target, p2.target);
}

TEST(Modes, MultipleGivesCenteredAnchor) {
  const RegionPair r225 =
      outpaint::mode_to_regions(MultipleMode{2.25, 192});
  EXPECT_EQ(r225.anchor, (CropRegion{32, 32, 128, 128}));
  EXPECT_EQ(r225.target, (CropRegion{0, 0, 192, 192}));

  const RegionPair r5 = outpaint::mode_to_regions(MultipleMode{5.0, 192});
  EXPECT_EQ(r5.anchor, (CropRegion{53, 53, 86, 86}));

  const RegionPair r117 = outpaint::mode_to_regions(MultipleMode{11.7, 192});
  EXPECT_EQ(r117.anchor, (CropRegion{68, 68, 56, 56}));

  const RegionPair r1 = outpaint::mode_to_regions(MultipleMode{1.0, 192});
  EXPECT_EQ(r1.anchor, r1.target);
}

TEST(Modes, MultipleValidation) {
  EXPECT_THROW(outpaint::mode_to_regions(MultipleMode{0.5, 192}), Error);
  EXPECT_THROW(outpaint::mode_to_regions(MultipleMode{2.25, 1}), Error);
  try {
    outpaint::mode_to_regions(MultipleMode{1.0e6, 64});
    FAIL() << "expected DegenerateAnchor";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateAnchor);
  }
}

TEST(Modes, ExplicitPassesThroughAfterValidation) {
  const ExplicitMode mode{CropRegion{10, 20, 30, 40}, CropRegion{0, 0, 50, 60}};
  const RegionPair r = outpaint::mode_to_regions(mode);
  EXPECT_EQ(r.anchor, mode.anchor);
  EXPECT_EQ(r.target, mode.target);
  EXPECT_THROW(outpaint::mode_to_regions(
                   ExplicitMode{CropRegion{0, 0, 0, 4}, CropRegion{0, 0, 4, 4}}),
               Error);
}
