#pragma once

#include <span>

#include "rispls/channel.hpp"

namespace rispls {

// A concrete transmit design: RIS phases plus per-LU beamforming and
// per-Eve AN vectors (row-major K x N_T and M x N_T).
struct TransmitDesign {
  std::vector<double> phi;
  CMat w;
  CMat z;
};

double design_power(const TransmitDesign& d);

struct SeeBreakdown {
  std::vector<double> rate;      // per LU
  std::vector<double> leakage;   // M x K row-major, leakage[m*K+k]
  std::vector<double> secrecy;   // per LU, clamped
  double total_power = 0;        // watts
  double see = 0;                // bits/s/Hz/W
};

// Hard-clamped evaluation metric (max over Eves, [.]^+ on the gap).
SeeBreakdown see(const ChannelRealization& ch, const TransmitDesign& d, double p_c);

double rate_lu(const ChannelRealization& ch, const TransmitDesign& d, std::size_t k);
double rate_eve(const ChannelRealization& ch, const TransmitDesign& d, std::size_t m,
                std::size_t k);

// Differentiable design: phi (batch*L) x 1, w (batch*K) x N_T,
// z (batch*M) x N_T.
struct DesignTensors {
  Tensor phi;
  ComplexPair w;
  ComplexPair z;
};

struct LossTensors {
  Tensor per_sample;  // batch x 1, the unclamped soft-secrecy loss
  Tensor mean;        // scalar
  Tensor rates;       // (batch*K) x 1
  Tensor leakage;     // (batch*K) x M, row (s,k), column m
};

// Unsupervised loss: minus soft secrecy sum over consumed power. The
// secrecy gap uses gamma * max over Eves without the [.]^+ clamp; the max
// routes its gradient to the argmax Eve.
LossTensors training_loss_graph(std::span<const ChannelRealization> batch,
                                const CsiTensors& csi, const DesignTensors& design,
                                double gamma, double p_c);

// Single-sample convenience: builds the effective-CSI graph from design.phi.
Tensor training_loss(const ChannelRealization& ch, const DesignTensors& design,
                     double gamma, double p_c);

}  // namespace rispls
