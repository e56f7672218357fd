#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "beamgat/errors.hpp"
#include "beamgat/ingest.hpp"
#include "beamgat/metrics.hpp"

using namespace beamgat;

namespace {

std::vector<std::byte> floats_le(std::initializer_list<float> values) {
  std::vector<std::byte> out;
  for (float v : values) {
    auto u = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::byte>((u >> (8 * b)) & 0xffu));
  }
  return out;
}

PointCloud beams_cloud(const std::vector<int>& beams, double z = 1.0) {
  PointCloud c;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    c.points.push_back({static_cast<double>(i), 0.5 * static_cast<double>(i), z + static_cast<double>(i), 0.1});
    c.beam.push_back(beams[i]);
  }
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("beamgat_ingest_" + name);
}

}  // namespace

TEST(KittiIo, DecodesHandBuiltRecords) {
  const auto bytes = floats_le({1.0f, 2.0f, 3.0f, 0.5f, 4.0f, 5.0f, 6.0f, 0.1f});
  ASSERT_EQ(bytes.size(), 32u);
  const auto res = decode_kitti_bin(bytes);
  ASSERT_EQ(res.cloud.size(), 2u);
  EXPECT_EQ(res.cloud.points[0].x, 1.0);
  EXPECT_EQ(res.cloud.points[0].y, 2.0);
  EXPECT_EQ(res.cloud.points[0].z, 3.0);
  EXPECT_EQ(res.cloud.points[0].r, 0.5);
  EXPECT_EQ(res.cloud.points[1].x, 4.0);
  EXPECT_EQ(res.cloud.points[1].z, 6.0);
  EXPECT_DOUBLE_EQ(res.cloud.points[1].r, static_cast<double>(0.1f));
  EXPECT_FALSE(res.cloud.has_beams());
}

TEST(KittiIo, EmptyFileGivesEmptyCloud) {
  const auto p = temp_path("empty.bin");
  { std::ofstream(p, std::ios::binary); }
  const auto res = read_kitti_bin(p);
  EXPECT_EQ(res.cloud.size(), 0u);
  EXPECT_EQ(res.skipped_non_finite, 0u);
  std::filesystem::remove(p);
}

TEST(KittiIo, TruncatedRecordIsFormatError) {
  const auto p = temp_path("trunc.bin");
  {
    std::ofstream out(p, std::ios::binary);
    const char junk[17] = {};
    out.write(junk, 17);
  }
  EXPECT_THROW(read_kitti_bin(p), FormatError);
  std::filesystem::remove(p);
}

TEST(KittiIo, MissingFileIsIoError) {
  EXPECT_THROW(read_kitti_bin(temp_path("does_not_exist.bin")), IoError);
}

TEST(KittiIo, NonFiniteRecordsSkippedAndCounted) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  const auto bytes = floats_le({1, 1, 1, 0.2f, nan, 0, 0, 0, 2, 2, 2, 0.3f, 0, inf, 0, 0});
  const auto res = decode_kitti_bin(bytes);
  EXPECT_EQ(res.cloud.size(), 2u);
  EXPECT_EQ(res.skipped_non_finite, 2u);
}

TEST(KittiIo, RoundTripThroughFile) {
  PointCloud c = beams_cloud({0, 1, 2, 3});
  for (auto& p : c.points) {
    p.x = static_cast<float>(p.x);
    p.y = static_cast<float>(p.y);
    p.z = static_cast<float>(p.z);
    p.r = static_cast<float>(p.r);
  }
  const auto path = temp_path("rt.bin");
  write_kitti_bin(path, c);
  EXPECT_EQ(std::filesystem::file_size(path), 64u);
  const auto back = read_kitti_bin(path);
  EXPECT_EQ(back.cloud.points, c.points);
  std::filesystem::remove(path);
}

TEST(Beams, HandArithmeticExample) {
  const BeamModel m;
  PointCloud c;
  c.points.push_back({1, 0, 0, 0});
  const auto est = estimate_beams(c, m);
  // floor((0 + 24.8) / 26.8 * 64) = floor(59.22...) = 59
  EXPECT_EQ(est.cloud.beam[0], static_cast<int>(std::floor(24.8 / 26.8 * 64)));
  EXPECT_EQ(est.cloud.beam[0], 59);
}

TEST(Beams, Boundaries) {
  const BeamModel m;
  EXPECT_EQ(beam_for_elevation(m.elev_min_deg, m), 0);
  EXPECT_EQ(beam_for_elevation(m.elev_max_deg, m), 63);
  EXPECT_EQ(beam_for_elevation(45.0, m), 63);
  EXPECT_EQ(beam_for_elevation(-80.0, m), 0);
}

TEST(Beams, OriginPointFlaggedAsBeamZero) {
  PointCloud c;
  c.points.push_back({0, 0, 0, 0});
  c.points.push_back({10, 0, -1, 0});
  const auto est = estimate_beams(c);
  EXPECT_EQ(est.cloud.beam[0], 0);
  ASSERT_EQ(est.origin_points.size(), 1u);
  EXPECT_EQ(est.origin_points[0], 0u);
}

TEST(Sampling, ExactPerBeamProportions) {
  std::vector<int> beams;
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 25; ++i) beams.push_back(b);
  const PointCloud c = beams_cloud(beams);
  const PointCloud s = stratified_sample(c, 40, 7);
  ASSERT_EQ(s.size(), 40u);
  std::map<int, int> count;
  for (int b : s.beam) ++count[b];
  for (int b = 0; b < 4; ++b) EXPECT_EQ(count[b], 10);
}

TEST(Sampling, TargetAtLeastSizeReturnsCloud) {
  const PointCloud c = beams_cloud({0, 1, 2, 3, 4});
  const PointCloud s = stratified_sample(c, 5, 1);
  EXPECT_EQ(s.points, c.points);
  EXPECT_EQ(s.beam, c.beam);
  EXPECT_EQ(stratified_sample(c, 100, 1).points, c.points);
}

TEST(Sampling, DeterministicAndOrderPreserving) {
  std::vector<int> beams;
  for (int i = 0; i < 500; ++i) beams.push_back(i % 7);
  const PointCloud c = beams_cloud(beams);
  const PointCloud a = stratified_sample(c, 123, 99);
  const PointCloud b = stratified_sample(c, 123, 99);
  EXPECT_EQ(a.points, b.points);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a.points[i - 1].x, a.points[i].x);
  const PointCloud d = stratified_sample(c, 123, 100);
  EXPECT_NE(a.points, d.points);
}

TEST(Sampling, QuotasLargestRemainder) {
  const std::vector<std::size_t> counts{1, 1, 1};
  const auto q = proportional_quotas(counts, 2);
  EXPECT_EQ(q, (std::vector<std::size_t>{1, 1, 0}));
  const std::vector<std::size_t> skew{90, 5, 5};
  const auto q2 = proportional_quotas(skew, 10);
  EXPECT_EQ(q2[0] + q2[1] + q2[2], 10u);
  EXPECT_GE(q2[1], 1u);
  EXPECT_GE(q2[2], 1u);
}

TEST(Dropout, QuarterOfUniformBeams) {
  std::vector<int> beams;
  for (int b = 0; b < 64; ++b)
    for (int i = 0; i < 10; ++i) beams.push_back(b);
  const SparseFrame f = apply_beam_dropout(beams_cloud(beams), {4, 0});
  EXPECT_DOUBLE_EQ(static_cast<double>(f.num_dropped()) / static_cast<double>(f.size()), 16.0 / 64.0);
}

TEST(Dropout, OffsetShiftsDroppedBeams) {
  std::vector<int> beams;
  for (int b = 0; b < 64; ++b) beams.push_back(b);
  const SparseFrame f = apply_beam_dropout(beams_cloud(beams), {4, 1});
  for (int b = 0; b < 64; ++b) EXPECT_EQ(f.dropped(static_cast<std::size_t>(b)), b % 4 == 1) << b;
}

TEST(Dropout, DegeneratePatternsRejected) {
  EXPECT_THROW(apply_beam_dropout(beams_cloud({0, 0, 0}), {4, 0}), ConfigError);
  EXPECT_THROW(apply_beam_dropout(beams_cloud({1, 2, 3}), {4, 0}), ConfigError);
  EXPECT_THROW(apply_beam_dropout(beams_cloud({1, 2, 3}), {4, 4}), ConfigError);
  EXPECT_THROW(apply_beam_dropout(beams_cloud({1, 2, 3}), {0, 0}), ConfigError);
}

TEST(Dropout, MasksZOnlyAndKeepsTruthPrivate) {
  const PointCloud c = beams_cloud({0, 1, 2, 3, 4, 5, 6, 7}, 2.0);
  const SparseFrame f = apply_beam_dropout(c, {4, 0});
  ASSERT_EQ(f.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(f.cloud().points[i].x, c.points[i].x);
    EXPECT_EQ(f.cloud().points[i].y, c.points[i].y);
    EXPECT_EQ(f.z_masked()[i], f.dropped(i) ? 0.0 : c.points[i].z);
    EXPECT_EQ(f.cloud().points[i].z, f.z_masked()[i]);
    EXPECT_EQ(metrics::GroundTruth::z(f)[i], c.points[i].z);
  }
  EXPECT_EQ(f.dropped_indices(), (std::vector<std::size_t>{0, 4}));
}

TEST(Dropout, IdempotentOnMasks) {
  std::vector<int> beams;
  for (int i = 0; i < 200; ++i) beams.push_back(i % 64);
  const SparseFrame f = apply_beam_dropout(beams_cloud(beams), {4, 0});
  const SparseFrame g = apply_beam_dropout(f.cloud(), {4, 0});
  EXPECT_EQ(f.dropped_mask(), g.dropped_mask());
}
