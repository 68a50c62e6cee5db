#include "outpaint/image.hpp"

#include <gtest/gtest.h>

using outpaint::CropRegion;
using outpaint::Error;
using outpaint::Image;

TEST(Image, LayoutIsInterleavedRowMajor) {
  Image img(2, 3, 2);
  img.at(1, 2, 1) = 7.0f;
  EXPECT_EQ(img.data[(1 * 3 + 2) * 2 + 1], 7.0f);
  EXPECT_EQ(img.size(), 12u);
}

TEST(Image, CropExtractsWindow) {
  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x, 0) = static_cast<float>(y * 4 + x);
  const Image c = outpaint::crop(img, CropRegion{1, 2, 2, 2});
  EXPECT_EQ(c.h, 2);
  EXPECT_EQ(c.w, 2);
  EXPECT_EQ(c.at(0, 0, 0), 6.0f);
  EXPECT_EQ(c.at(1, 1, 0), 11.0f);
  EXPECT_THROW(outpaint::crop(img, CropRegion{3, 3, 2, 2}), Error);
  EXPECT_THROW(outpaint::crop(img, CropRegion{0, 0, 0, 2}), Error);
}

TEST(Resize, SameSizeIsBitIdentical) {
  Image img(5, 7, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = 0.37f * static_cast<float>(i) - 1.0f;
  const Image out = outpaint::resize_bilinear(img, 5, 7);
  EXPECT_EQ(out.data, img.data);
}

// Frozen expectation for the half-pixel-centered kernel: a 2x2 ramp
// [[0,1],[2,3]] upsampled to 4x4.
TEST(Resize, TwoByTwoUpsampleMatchesClosedForm) {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 1, 0) = 1;
  img.at(1, 0, 0) = 2;
  img.at(1, 1, 0) = 3;
  const Image out = outpaint::resize_bilinear(img, 4, 4);
  const float expect[4][4] = {{0.0f, 0.25f, 0.75f, 1.0f},
                              {0.5f, 0.75f, 1.25f, 1.5f},
                              {1.5f, 1.75f, 2.25f, 2.5f},
                              {2.0f, 2.25f, 2.75f, 3.0f}};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      EXPECT_FLOAT_EQ(out.at(y, x, 0), expect[y][x]) << y << "," << x;
}

TEST(Resize, CornersPreservedOnUpsample) {
  Image img(3, 3, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>(i) * 0.1f;
  const Image out = outpaint::resize_bilinear(img, 9, 9);
  for (int ch = 0; ch < 2; ++ch) {
    EXPECT_FLOAT_EQ(out.at(0, 0, ch), img.at(0, 0, ch));
    EXPECT_FLOAT_EQ(out.at(0, 8, ch), img.at(0, 2, ch));
    EXPECT_FLOAT_EQ(out.at(8, 0, ch), img.at(2, 0, ch));
    EXPECT_FLOAT_EQ(out.at(8, 8, ch), img.at(2, 2, ch));
  }
}

TEST(Resize, ConstantImageStaysConstant) {
  Image img(6, 4, 3, 0.42f);
  for (const auto [oh, ow] : {std::pair{3, 2}, {13, 9}, {1, 1}, {64, 64}}) {
    const Image out = outpaint::resize_bilinear(img, oh, ow);
    for (float v : out.data) EXPECT_FLOAT_EQ(v, 0.42f);
  }
}

TEST(Resize, RejectsBadSizes) {
  Image img(2, 2, 1);
  EXPECT_THROW(outpaint::resize_bilinear(img, 0, 2), Error);
  EXPECT_THROW(outpaint::resize_bilinear(img, 2, -1), Error);
}

TEST(Normalization, ByteLevelsRoundTripExactly) {
  for (int v = 0; v <= 255; ++v) {
    const float unit = outpaint::u8_to_unit(static_cast<std::uint8_t>(v));
    EXPECT_GE(unit, -1.0f);
    EXPECT_LE(unit, 1.0f);
    EXPECT_EQ(outpaint::unit_to_u8(unit), v);
  }
}

TEST(Normalization, ArbitraryFloatsLandWithinOneLevel) {
  const float level = 2.0f / 255.0f;
  for (float v = -1.0f; v <= 1.0f; v += 0.00731f) {
    const float back = outpaint::u8_to_unit(outpaint::unit_to_u8(v));
    EXPECT_NEAR(back, v, level);
  }
  // Out-of-range values clamp.
  EXPECT_EQ(outpaint::unit_to_u8(5.0f), 255);
  EXPECT_EQ(outpaint::unit_to_u8(-5.0f), 0);
}
