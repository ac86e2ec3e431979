#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sen2sharp/raster.hpp"
#include "support.hpp"

using namespace sen2sharp;
using namespace testing_support;

namespace {

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

// "MSR1", header length 78, header
// {"width":3,"height":2,"bands":["B05","B06"],"resolution_m":20,"dtype":"f32le"}
// then B05 = 1 0.5 2 -1 0.25 3 and B06 = 0 4 1.5 0.75 8 -2 as f32 LE.
const char* kFixture =
    "4d5352314e0000007b227769647468223a332c22686569676874223a322c2262616e6473223a5b22423035222c2242"
    "3036225d2c227265736f6c7574696f6e5f6d223a32302c226474797065223a226633326c65227d0000803f0000003f"
    "00000040000080bf0000803e0000404000000000000080400000c03f0000403f00000041000000c0";

template <typename Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::InvalidArgument;
}

RasterStack ramp4x4() {
  Grid g(4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) g(x, y) = static_cast<double>(y * 4 + x);
  return RasterStack::from_grids({"B05"}, {g}, 20.0);
}

}  // namespace

TEST(Raster, HexFixtureDecodes) {
  const RasterStack s = decode_raster(from_hex(kFixture));
  EXPECT_EQ(s.width(), 3u);
  EXPECT_EQ(s.height(), 2u);
  EXPECT_EQ(s.resolution_m(), 20.0);
  ASSERT_EQ(s.band_count(), 2u);
  EXPECT_EQ(s.band(0).name, "B05");
  EXPECT_EQ(s.band(1).name, "B06");
  EXPECT_EQ(s.band(0).samples, (std::vector<float>{1.0f, 0.5f, 2.0f, -1.0f, 0.25f, 3.0f}));
  EXPECT_EQ(s.band(1).samples, (std::vector<float>{0.0f, 4.0f, 1.5f, 0.75f, 8.0f, -2.0f}));
}

TEST(Raster, PayloadOneByteShortIsSizeMismatch) {
  auto bytes = from_hex(kFixture);
  bytes.pop_back();
  EXPECT_EQ(error_of([&] { decode_raster(bytes); }), Errc::SizeMismatch);
  bytes.push_back(0);
  bytes.push_back(0);
  EXPECT_EQ(error_of([&] { decode_raster(bytes); }), Errc::SizeMismatch);
}

TEST(Raster, MalformedHeadersRejected) {
  auto bytes = from_hex(kFixture);
  auto bad_magic = bytes;
  bad_magic[3] = '2';
  EXPECT_EQ(error_of([&] { decode_raster(bad_magic); }), Errc::MalformedHeader);

  auto frame = [](const std::string& json, std::size_t payload) {
    std::vector<std::uint8_t> out = detail::frame_header(kRasterMagic, json);
    out.resize(out.size() + payload, 0);
    return out;
  };
  const std::string ok = R"({"width":1,"height":1,"bands":["B05"],"resolution_m":20,"dtype":"f32le"})";
  EXPECT_NO_THROW(decode_raster(frame(ok, 4)));
  for (const std::string bad : {
           R"({"width":1,"height":1,"bands":["B05"],"resolution_m":20,"dtype":"f64le"})",
           R"({"width":1,"height":1,"bands":["B05"],"resolution_m":20})",
           R"({"width":1,"height":1,"bands":["B05"],"resolution_m":20,"dtype":"f32le","extra":0})",
           R"({"width":1.5,"height":1,"bands":["B05"],"resolution_m":20,"dtype":"f32le"})",
           R"({"width":0,"height":1,"bands":["B05"],"resolution_m":20,"dtype":"f32le"})",
           R"({"width":1,"height":1,"bands":[],"resolution_m":20,"dtype":"f32le"})",
           R"({"width":1,"height":1,"bands":["B05"],"resolution_m":-1,"dtype":"f32le"})",
           R"({"width":1,"height":1,"bands":["B05","B05"],"resolution_m":20,"dtype":"f32le"})",
           R"(not json)"})
    EXPECT_EQ(error_of([&] { decode_raster(frame(bad, 4)); }), Errc::MalformedHeader) << bad;
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 6);
  EXPECT_EQ(error_of([&] { decode_raster(truncated); }), Errc::MalformedHeader);
}

TEST(Raster, NonFiniteSampleInPayloadRejected) {
  auto bytes = from_hex(kFixture);
  // last sample (-2.0f) becomes +inf
  const std::size_t at = bytes.size() - 4;
  bytes[at] = 0x00;
  bytes[at + 1] = 0x00;
  bytes[at + 2] = 0x80;
  bytes[at + 3] = 0x7f;
  EXPECT_EQ(error_of([&] { decode_raster(bytes); }), Errc::NonFiniteSample);
}

TEST(Raster, NaNRejectedBeforeWrite) {
  TempDir dir;
  Grid g(2, 2, 1.0);
  g(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_of([&] { save_raster(RasterStack::from_grids({"B05"}, {g}, 20.0), dir / "nan.msr"); }),
            Errc::NonFiniteSample);
  EXPECT_FALSE(std::filesystem::exists(dir / "nan.msr"));
}

TEST(Raster, ConstantStackPayloadIsRepeatedGroups) {
  const RasterStack s = RasterStack::from_grids({"B05"}, {Grid(8, 8, 0.125)}, 20.0);
  const auto bytes = encode_raster(s);
  ASSERT_GE(bytes.size(), 256u);
  const std::size_t payload = bytes.size() - 256;
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(bytes[payload + 4 * i + 0], 0x00);
    EXPECT_EQ(bytes[payload + 4 * i + 1], 0x00);
    EXPECT_EQ(bytes[payload + 4 * i + 2], 0x00);
    EXPECT_EQ(bytes[payload + 4 * i + 3], 0x3e);
  }
}

TEST(Raster, SaveLoadRoundTripIsByteIdentical) {
  TempDir dir;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 17), nb(1, 6);
    std::vector<std::string> names;
    const std::size_t bands = nb(rng);
    for (std::size_t b = 0; b < bands; ++b) names.push_back("X" + std::to_string(b));
    const RasterStack s = random_stack(names, dim(rng), dim(rng), 20.0, rng);
    save_raster(s, dir / "a.msr");
    const RasterStack back = load_raster(dir / "a.msr");
    EXPECT_EQ(back, s);
    save_raster(back, dir / "b.msr");
    EXPECT_EQ(detail::read_file(dir / "a.msr"), detail::read_file(dir / "b.msr"));
  }
}

TEST(Raster, TwoSavesAreByteIdentical) {
  TempDir dir;
  std::mt19937_64 rng(3);
  const RasterStack s = random_stack(target_names(), 9, 5, 20.0, rng);
  save_raster(s, dir / "a.msr");
  save_raster(s, dir / "b.msr");
  EXPECT_EQ(detail::read_file(dir / "a.msr"), detail::read_file(dir / "b.msr"));
}

TEST(Raster, MissingFileIsIoFailure) {
  TempDir dir;
  EXPECT_EQ(error_of([&] { load_raster(dir / "absent.msr"); }), Errc::IoFailure);
}

TEST(Raster, ConstructorInvariants) {
  EXPECT_EQ(error_of([] { RasterStack(2, 2, {Band{"B05", {1, 2, 3}}}, 20.0); }), Errc::SizeMismatch);
  EXPECT_EQ(error_of([] { RasterStack(1, 1, {Band{"B05", {1}}, Band{"B05", {2}}}, 20.0); }),
            Errc::InvalidArgument);
  EXPECT_EQ(error_of([] { RasterStack(1, 1, {}, 20.0); }), Errc::InvalidArgument);
  EXPECT_EQ(error_of([] { RasterStack(1, 1, {Band{"B05", {1}}}, 0.0); }), Errc::InvalidArgument);
}

TEST(Raster, IdentityCrop) {
  std::mt19937_64 rng(5);
  const RasterStack s = random_stack(target_names(), 7, 5, 20.0, rng);
  EXPECT_EQ(crop(s, 0, 0, s.width(), s.height()), s);
}

TEST(Raster, CropOfRampEnumeratesSourceIndices) {
  const RasterStack c = crop(ramp4x4(), 1, 1, 2, 2);
  // source (x, y) holds 4y + x
  EXPECT_EQ(c.band(0).samples, (std::vector<float>{5, 6, 9, 10}));
}

TEST(Raster, CropPastEdgeIsOutOfBounds) {
  const RasterStack s = ramp4x4();
  EXPECT_EQ(error_of([&] { crop(s, 3, 0, 2, 1); }), Errc::OutOfBounds);
  EXPECT_EQ(error_of([&] { crop(s, 0, 0, 0, 1); }), Errc::OutOfBounds);
  EXPECT_EQ(error_of([&] { crop(s, 0, 4, 1, 1); }), Errc::OutOfBounds);
}

TEST(Raster, NestedCropsCompose) {
  std::mt19937_64 rng(17);
  const RasterStack s = random_stack({"B05", "B06"}, 20, 15, 20.0, rng);
  std::uniform_int_distribution<std::size_t> u(0, 1000);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w1 = 1 + u(rng) % 20, h1 = 1 + u(rng) % 15;
    const std::size_t x1 = u(rng) % (20 - w1 + 1), y1 = u(rng) % (15 - h1 + 1);
    const std::size_t w2 = 1 + u(rng) % w1, h2 = 1 + u(rng) % h1;
    const std::size_t x2 = u(rng) % (w1 - w2 + 1), y2 = u(rng) % (h1 - h2 + 1);
    EXPECT_EQ(crop(crop(s, x1, y1, w1, h1), x2, y2, w2, h2), crop(s, x1 + x2, y1 + y2, w2, h2));
  }
}

TEST(Raster, SelectBands) {
  std::mt19937_64 rng(23);
  const RasterStack s = random_stack(target_names(), 6, 4, 20.0, rng);
  EXPECT_EQ(select_bands(s, s.band_names()), s);
  const RasterStack two = select_bands(s, {"B12", "B11"});
  ASSERT_EQ(two.band_count(), 2u);
  EXPECT_EQ(two.band(0).name, "B12");
  EXPECT_EQ(two.band(1).name, "B11");
  EXPECT_EQ(two.band(0).samples, s.band(5).samples);
  EXPECT_EQ(two.band(1).samples, s.band(4).samples);
  EXPECT_EQ(error_of([&] { select_bands(s, {"B99"}); }), Errc::UnknownBand);
}

TEST(Raster, SceneValidation) {
  std::mt19937_64 rng(29);
  const RasterStack z = random_stack(guide_names(), 8, 8, 10.0, rng);
  const RasterStack x = random_stack(target_names(), 4, 4, 20.0, rng);
  EXPECT_NO_THROW(Scene(z, x));
  EXPECT_EQ(error_of([&] { Scene(z, random_stack(target_names(), 4, 3, 20.0, rng)); }), Errc::ShapeMismatch);
  EXPECT_EQ(error_of([&] { Scene(x, z); }), Errc::ShapeMismatch);
  EXPECT_EQ(error_of([&] { Scene(z, random_stack(target_names(), 4, 4, 40.0, rng)); }), Errc::ShapeMismatch);
}
