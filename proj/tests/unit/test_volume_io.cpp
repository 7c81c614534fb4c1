#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "nlsam/error.hpp"
#include "nlsam/gradients.hpp"
#include "nlsam/nifti.hpp"
#include "nlsam/volume.hpp"
#include "test_support.hpp"

using namespace nlsam;
using nlsam::testing::TempDir;

namespace {

// Hand-built NIfTI-1 header, independent of the library writer. `dims` is the
// dim[] field, starting with the number of dimensions.
std::vector<std::uint8_t> raw_header(std::vector<std::int16_t> dims, std::int16_t datatype, std::int16_t bitpix,
                                     float slope = 0.0f, float inter = 0.0f) {
  std::vector<std::uint8_t> h(352, 0);
  auto put = [&](std::size_t off, auto v) { std::memcpy(h.data() + off, &v, sizeof(v)); };
  put(0, std::int32_t{348});
  for (std::size_t i = 0; i < dims.size(); ++i) put(40 + 2 * i, dims[i]);
  put(70, datatype);
  put(72, bitpix);
  for (int i = 0; i < 8; ++i) put(76 + 4 * static_cast<std::size_t>(i), 1.0f);
  put(80, 2.0f);
  put(108, 352.0f);
  put(112, slope);
  put(116, inter);
  std::memcpy(h.data() + 344, "n+1\0", 4);
  return h;
}

template <typename T>
void write_file(const std::filesystem::path& p, std::vector<std::uint8_t> header, const std::vector<T>& values) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(ReadVolume, MinimalFloatFileKeepsLinearOrder) {
  TempDir dir("io");
  write_file(dir / "a.nii", raw_header({3, 2, 2, 2}, 16, 32), std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7});
  const Volume4D v = read_volume(dir / "a.nii");
  ASSERT_EQ(v.dims(), (Shape4{2, 2, 2, 1}));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(v.data()[i], static_cast<double>(i));
  EXPECT_EQ(v(1, 0, 0, 0), 1.0);
  EXPECT_EQ(v(0, 1, 0, 0), 2.0);
  EXPECT_EQ(v(0, 0, 1, 0), 4.0);
  EXPECT_DOUBLE_EQ(v.spacing()[0], 2.0);
}

TEST(ReadVolume, AppliesSlopeAndIntercept) {
  TempDir dir("io");
  write_file(dir / "s.nii", raw_header({3, 1, 1, 1}, 4, 16, 2.0f, 1.0f), std::vector<std::int16_t>{3});
  const Volume4D v = read_volume(dir / "s.nii");
  EXPECT_EQ(v.volumes(), 1u);
  EXPECT_DOUBLE_EQ(v.data()[0], 7.0);
}

TEST(ReadVolume, Float64Supported) {
  TempDir dir("io");
  write_file(dir / "d.nii", raw_header({3, 2, 1, 1}, 64, 64), std::vector<double>{0.125, 1e10});
  const Volume4D v = read_volume(dir / "d.nii");
  EXPECT_EQ(v.data()[0], 0.125);
  EXPECT_EQ(v.data()[1], 1e10);
}

TEST(ReadVolume, DistinctErrors) {
  TempDir dir("io");
  auto bad_magic = raw_header({3, 2, 1, 1}, 16, 32);
  std::memcpy(bad_magic.data() + 344, "ni1\0", 4);
  write_file(dir / "magic.nii", bad_magic, std::vector<float>{1, 2});
  EXPECT_THROW(read_volume(dir / "magic.nii"), MalformedHeaderError);

  write_file(dir / "type.nii", raw_header({3, 2, 1, 1}, 2, 8), std::vector<std::uint8_t>{1, 2});
  EXPECT_THROW(read_volume(dir / "type.nii"), UnsupportedDatatypeError);

  write_file(dir / "short.nii", raw_header({3, 4, 1, 1}, 16, 32), std::vector<float>{1, 2});
  EXPECT_THROW(read_volume(dir / "short.nii"), TruncatedDataError);

  write_file(dir / "dims.nii", raw_header({3, 2, 0, 1}, 16, 32), std::vector<float>{1, 2});
  EXPECT_THROW(read_volume(dir / "dims.nii"), MalformedHeaderError);

  EXPECT_THROW(read_volume(dir / "missing.nii"), IoError);
}

TEST(ReadVolume, ClampsNegativesAndCountsThem) {
  TempDir dir("io");
  write_file(dir / "n.nii", raw_header({3, 3, 1, 1}, 16, 32), std::vector<float>{-1, 2, -3});
  ReadReport report;
  const Volume4D v = read_volume(dir / "n.nii", &report);
  EXPECT_EQ(report.clamped_negatives, 2u);
  EXPECT_EQ(v.data()[0], 0.0);
  EXPECT_EQ(v.data()[1], 2.0);
  EXPECT_EQ(read_volume_raw(dir / "n.nii").data()[2], -3.0);
}

TEST(WriteVolume, RoundTripIsExactForFloatValues) {
  TempDir dir("io");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1000.0f);
  Volume4D v({4, 4, 4, 3}, {1.5, 2.0, 2.5});
  for (double& x : v.data()) x = u(rng);
  write_volume(v, dir / "r.nii");
  const Volume4D back = read_volume(dir / "r.nii");
  EXPECT_EQ(back.dims(), v.dims());
  EXPECT_EQ(back.spacing(), v.spacing());
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(back.data()[i] - v.data()[i]));
  EXPECT_EQ(worst, 0.0);
}

TEST(WriteVolume, PreservesSourceOrientationBytes) {
  TempDir dir("io");
  auto header = raw_header({3, 2, 1, 1}, 16, 32);
  for (std::size_t off = 252; off < 344; ++off) header[off] = static_cast<std::uint8_t>(off & 0x7f);
  write_file(dir / "o.nii", header, std::vector<float>{1, 2});
  write_volume(read_volume(dir / "o.nii"), dir / "o2.nii");
  std::ifstream in(dir / "o2.nii", std::ios::binary);
  std::vector<char> bytes(348);
  in.read(bytes.data(), 348);
  for (std::size_t off = 252; off < 344; ++off) EXPECT_EQ(static_cast<std::uint8_t>(bytes[off]), off & 0x7f);
}

TEST(WriteVolume, UnwritablePathIsIoError) {
  Volume4D v({2, 2, 2, 1});
  EXPECT_THROW(write_volume(v, "/nonexistent-dir/x/y.nii"), IoError);
}

TEST(Mask, RoundTrip) {
  TempDir dir("io");
  Mask3D m({3, 2, 2}, false);
  m.data[1] = m.data[5] = 1;
  write_mask(m, dir / "m.nii");
  const Mask3D back = read_mask(dir / "m.nii");
  EXPECT_EQ(back.dims, m.dims);
  EXPECT_EQ(back.data, m.data);
  EXPECT_EQ(back.count(), 2u);
}

TEST(Volume4D, OffsetsAreUniqueAndXFastest) {
  const Volume4D v({3, 4, 5, 2});
  std::vector<int> seen(v.size(), 0);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t z = 0; z < 5; ++z)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 3; ++x) ++seen[v.index(x, y, z, t)];
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(v.index(1, 0, 0, 0), 1u);
  EXPECT_EQ(v.index(0, 0, 0, 1), 60u);
}

TEST(Volume4D, InvariantsAreChecked) {
  EXPECT_THROW(Volume4D({2, 2, 2, 1}, {1.0, 0.0, 1.0}), DomainError);
  EXPECT_THROW(Volume4D({2, 2, 2, 1}, {1.0, 1.0, 1.0}, std::vector<double>(7)), DimensionMismatchError);
  Volume4D v({2, 1, 1, 1});
  v.data()[0] = std::nan("");
  EXPECT_THROW(validate(v), DomainError);
}

TEST(Gradients, ReadsRowsAndMarksB0) {
  TempDir dir("grad");
  write_text(dir / "b.bval", "0 1000 1000\n");
  write_text(dir / "b.bvec", "0 1 0\n0 0 1\n0 0 0\n");
  const GradientTable t = read_gradients(dir / "b.bval", dir / "b.bvec");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.b0_indices(), std::vector<std::size_t>{0});
  EXPECT_EQ(t.dwi_indices(), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(t.bvec(2), (Vec3{0.0, 1.0, 0.0}));
}

TEST(Gradients, NormalizesDirections) {
  const GradientTable t({0.0, 1000.0}, {Vec3{0, 0, 0}, Vec3{2, 0, 0}});
  EXPECT_EQ(t.bvec(1), (Vec3{1.0, 0.0, 0.0}));
}

TEST(Gradients, MismatchNamesTheFiles) {
  TempDir dir("grad");
  write_text(dir / "b.bval", "0 1000 1000\n");
  write_text(dir / "b.bvec", "0 1 0 1\n0 0 1 0\n0 0 0 0\n");
  try {
    read_gradients(dir / "b.bval", dir / "b.bvec");
    FAIL() << "expected a mismatch error";
  } catch (const GradientFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("b.bvec"), std::string::npos);
  }
}

TEST(Gradients, ThresholdAndMissingB0) {
  const GradientTable t({5.0, 1000.0}, {Vec3{0, 0, 0}, Vec3{0, 0, 1}}, 50.0);
  EXPECT_TRUE(t.is_b0(0));
  EXPECT_THROW(GradientTable({1000.0}, {Vec3{0, 0, 1}}), GradientFormatError);
  EXPECT_THROW(check_matches(t, 3), GradientFormatError);
}

TEST(Gradients, WriteReadRoundTrip) {
  TempDir dir("grad");
  const GradientTable t({0.0, 1000.0, 2000.0}, {Vec3{0, 0, 0}, Vec3{0, 0.6, 0.8}, Vec3{1, 0, 0}});
  write_gradients(t, dir / "g.bval", dir / "g.bvec");
  const GradientTable back = read_gradients(dir / "g.bval", dir / "g.bvec");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.bval(i), t.bval(i));
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(back.bvec(i)[a], t.bvec(i)[a], 1e-12);
  }
}
