#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "beamgat/errors.hpp"
#include "beamgat/ingest.hpp"

namespace beamgat {
namespace {

constexpr std::size_t kRecordBytes = 16;

float load_le_float(const std::byte* p) {
  std::array<std::byte, 4> raw;
  std::memcpy(raw.data(), p, 4);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  return std::bit_cast<float>(raw);
}

void store_le_float(float v, std::byte* p) {
  auto raw = std::bit_cast<std::array<std::byte, 4>>(v);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  std::memcpy(p, raw.data(), 4);
}

}  // namespace

KittiReadResult decode_kitti_bin(std::span<const std::byte> bytes) {
  if (bytes.size() % kRecordBytes != 0) {
    throw FormatError("truncated KITTI record: " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16");
  }
  KittiReadResult result;
  const std::size_t n = bytes.size() / kRecordBytes;
  result.cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* rec = bytes.data() + i * kRecordBytes;
    const float x = load_le_float(rec);
    const float y = load_le_float(rec + 4);
    const float z = load_le_float(rec + 8);
    const float r = load_le_float(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(r)) {
      ++result.skipped_non_finite;
      continue;
    }
    result.cloud.points.push_back({x, y, z, std::clamp(static_cast<double>(r), 0.0, 1.0)});
  }
  return result;
}

KittiReadResult read_kitti_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open KITTI file: " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return decode_kitti_bin(std::as_bytes(std::span(buf)));
}

std::vector<std::byte> encode_kitti_bin(const PointCloud& cloud) {
  std::vector<std::byte> out(cloud.size() * kRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const RawPoint& p = cloud.points[i];
    std::byte* rec = out.data() + i * kRecordBytes;
    store_le_float(static_cast<float>(p.x), rec);
    store_le_float(static_cast<float>(p.y), rec + 4);
    store_le_float(static_cast<float>(p.z), rec + 8);
    store_le_float(static_cast<float>(p.r), rec + 12);
  }
  return out;
}

void write_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto bytes = encode_kitti_bin(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace beamgat
