#pragma once

#include "rispls/stage1.hpp"
#include "rispls/stage2.hpp"

namespace rispls {

struct ModelFlags {
  bool residual_on = true;
  bool two_stage_on = true;
};

struct ModelForward {
  Tensor phi;      // (batch*L) x 1
  CsiTensors csi;  // shared with the stage-2 graph, feeds the loss
  Stage2Out s2;
  std::vector<TransmitDesign> designs;  // concrete per-sample designs
};

// Both stages plus every learnable weight, keyed by stable path names.
// Parameter shapes depend only on N_T, never on (L, K, M).
class TwoStageModel {
 public:
  std::size_t n_t = 0;
  ParamStore params;
  Stage1Params s1;
  Stage2Params s2;

  static TwoStageModel init(std::size_t n_t, std::uint64_t seed);

  ModelForward forward(std::span<const ChannelRealization> batch, HeadKind head,
                       ModelFlags flags, double p_max) const;
};

// Versioned binary checkpoint: header {magic "RPHG", version, (N_T,L,K,M),
// head kind}, then parameter blobs keyed by path, 64-bit little-endian.
struct CheckpointMeta {
  std::size_t n_t = 0, l = 0, k = 0, m = 0;
  HeadKind head = HeadKind::model_based;
};

void save_checkpoint(const std::string& path, const TwoStageModel& model,
                     const CheckpointMeta& meta);
TwoStageModel load_checkpoint(const std::string& path, CheckpointMeta& meta);

}  // namespace rispls
