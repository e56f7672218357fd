#include <algorithm>
#include <numeric>
#include <random>

#include "beamgat/errors.hpp"
#include "beamgat/ingest.hpp"

namespace beamgat {

std::vector<std::size_t> proportional_quotas(std::span<const std::size_t> counts,
                                             std::size_t target) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> quota(counts.size(), 0);
  if (total == 0) return quota;
  if (target >= total) return {counts.begin(), counts.end()};

  // Exact integer shares: count * target / total = floor + rem / total.
  std::vector<std::size_t> rem(counts.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    __extension__ using u128 = unsigned __int128;
    const u128 num = static_cast<u128>(counts[g]) * target;
    quota[g] = static_cast<std::size_t>(num / total);
    rem[g] = static_cast<std::size_t>(num % total);
    assigned += quota[g];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < target; ++i) {
    ++quota[order[i]];
    ++assigned;
  }

  // Keep every populated group alive by borrowing from the largest quota.
  const auto non_empty = static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
  if (target >= non_empty) {
    for (std::size_t g = 0; g < counts.size(); ++g) {
      if (counts[g] == 0 || quota[g] > 0) continue;
      const auto donor = static_cast<std::size_t>(
          std::max_element(quota.begin(), quota.end()) - quota.begin());
      --quota[donor];
      quota[g] = 1;
    }
  }
  return quota;
}

PointCloud stratified_sample(const PointCloud& cloud, std::size_t target, std::uint64_t seed) {
  cloud.check_beams();
  if (target >= cloud.size()) return cloud;

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(cloud.num_beams));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    members[static_cast<std::size_t>(cloud.beam[i])].push_back(i);
  }
  std::vector<std::size_t> counts(members.size());
  std::transform(members.begin(), members.end(), counts.begin(),
                 [](const auto& m) { return m.size(); });
  const auto quota = proportional_quotas(counts, target);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  keep.reserve(target);
  for (std::size_t b = 0; b < members.size(); ++b) {
    auto& m = members[b];
    // Partial Fisher-Yates: first quota[b] slots become a uniform sample.
    for (std::size_t i = 0; i < quota[b]; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m.size() - 1);
      std::swap(m[i], m[pick(rng)]);
    }
    keep.insert(keep.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[b]));
  }
  std::sort(keep.begin(), keep.end());

  PointCloud out;
  out.num_beams = cloud.num_beams;
  out.points.reserve(keep.size());
  out.beam.reserve(keep.size());
  for (std::size_t i : keep) {
    out.points.push_back(cloud.points[i]);
    out.beam.push_back(cloud.beam[i]);
  }
  return out;
}

}  // namespace beamgat
