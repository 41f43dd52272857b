#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radeval/tensor.hpp"

namespace radeval::refnet {

/// Convolution + batch norm + leaky ReLU, the composite block every other
/// block is assembled from.
struct ConvParams {
  Tensor kernel;  // (C_out, C_in, k, k), k odd
  int stride = 1;
  int padding = 0;
  std::vector<float> bn_gamma;  // all four BN vectors sized C_out, var > 0
  std::vector<float> bn_beta;
  std::vector<float> bn_mean;
  std::vector<float> bn_var;
  float leaky_slope = 0.1f;
  float bn_eps = 1e-5f;
};

/// Bare convolution (no BN, no activation) used for shortcut paths.
struct PlainConv {
  Tensor kernel;  // (C_out, C_in, 1, 1)
};

/// Residual inner: 1x1 reduce then 3x3 expand, shape preserving.
struct ResUnitParams {
  ConvParams reduce;
  ConvParams expand;
};

enum class CspVariant { Csp1, Csp2 };

/// Cross-stage partial block. Path a: stem CBL then the unit chain (with the
/// residual add for Csp1, without it for Csp2). Path b: 1x1 plain conv.
/// Output: fuse CBL over the channel concat of both paths.
struct CspParams {
  CspVariant variant = CspVariant::Csp1;
  ConvParams stem;
  std::vector<ResUnitParams> units;  // X units, at least one
  PlainConv shortcut;
  ConvParams fuse;
};

struct FocusParams {
  ConvParams conv;
};

struct SppParams {
  ConvParams project;  // 1x1 CBL over the pool concat
};

struct PanetFuseParams {
  ConvParams downsample;  // stride-2 3x3 CBL applied to the lower level
  ConvParams project;     // CBL over the concat
};

/// Direct convolution with a fixed loop order so outputs are bit-identical
/// across runs.
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding);

Tensor cbl_forward(const Tensor& x, const ConvParams& p);

Tensor res_unit_forward(const Tensor& x, const ResUnitParams& p);

Tensor csp_forward(const Tensor& x, const CspParams& p);

/// Parity slicing only: (N, C, H, W) -> (N, 4C, H/2, W/2) with channel
/// blocks ordered even-row/even-col, odd-row/even-col, even-row/odd-col,
/// odd-row/odd-col. H and W must be even.
Tensor focus_slice(const Tensor& x);

Tensor focus_forward(const Tensor& x, const FocusParams& p);

/// Stride-1 same-padding max pools with kernels 1, 5, 9, 13 concatenated on
/// channels: (N, C, H, W) -> (N, 4C, H, W). Padding cells are ignored, not
/// treated as zero.
Tensor spp_pool_concat(const Tensor& x);

Tensor spp_forward(const Tensor& x, const SppParams& p);

/// Fuses adjacent pyramid levels bottom-up: downsample p_low (2x the spatial
/// size of p_high) with a stride-2 CBL, concat with p_high, project.
Tensor panet_fuse(const Tensor& p_high, const Tensor& p_low, const PanetFuseParams& p);

/// Channel widths and stage depths for the backbone; the defaults are a
/// desk-scale stand-in for the small end of the family.
struct BackboneConfig {
  int base_width = 8;                    // channels after Focus
  std::array<int, 3> csp_depths{1, 2, 2};
};

struct BackboneParams {
  BackboneConfig config;
  FocusParams focus;    // 3 -> w, input stride 2
  ConvParams down1;     // w -> 2w, stride 2
  CspParams csp1;       // 2w -> 2w
  ConvParams down2;     // 2w -> 4w, stride 2
  CspParams csp2;       // 4w -> 4w, emits P3
  ConvParams down3;     // 4w -> 8w, stride 2
  CspParams csp3;       // 8w -> 8w, emits P4
  ConvParams down4;     // 8w -> 16w, stride 2
  SppParams spp;        // 16w -> 16w, emits P5
};

struct PyramidFeatures {
  Tensor p3;  // stride 8
  Tensor p4;  // stride 16
  Tensor p5;  // stride 32
};

/// Focus -> alternating stride-2 CBL and CSP1 stages -> SPP. Input H and W
/// must each be a multiple of 32.
PyramidFeatures backbone_forward(const Tensor& image, const BackboneParams& params);

/// Deterministic seeded weights; the same seed yields the same parameters on
/// every platform.
BackboneParams random_backbone_params(const BackboneConfig& config, std::uint64_t seed);

// --- invariant suite (backs the blocks-check command) ---

struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string message;  // empty on pass
};

struct InvariantConfig {
  std::array<int, 4> input{1, 3, 64, 64};  // (N, C, H, W) fed to the backbone checks
  BackboneConfig backbone;
};

/// Runs every structural invariant on seeded random weights. Contract
/// violations are reported as failures, never thrown.
std::vector<InvariantResult> run_invariant_suite(const InvariantConfig& config,
                                                 std::uint64_t seed);

}  // namespace radeval::refnet
