#pragma once

#include <optional>

#include "rispls/channel.hpp"

namespace rispls {

// On-disk dataset: header {magic "RISPLS1", version, N_T, L, K, M, sample
// count, scenario config echo}, then per-sample CSI blocks as interleaved
// Re/Im 64-bit little-endian doubles in fixed order (H, h_b[1..K],
// h_r[1..K], f_b[1..M], f_r[1..M]), then an optional oracle-SEE appendix.
struct Dataset {
  ScenarioConfig cfg;
  std::vector<ChannelRealization> samples;
  std::optional<std::vector<double>> oracle_see;
};

// Deterministic generation: sample i draws from stream split(i) of the
// config seed.
Dataset generate_dataset(const ScenarioConfig& cfg, std::size_t count);

// Writes to a temporary file and renames, so a failed run never leaves a
// partial dataset behind.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace rispls
