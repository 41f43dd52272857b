#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "radeval/error.hpp"
#include "radeval/refnet.hpp"

using namespace radeval;
using refnet::ConvParams;
using refnet::CspParams;
using refnet::CspVariant;
using refnet::ResUnitParams;

namespace {

ConvParams neutral(int c_in, int c_out, int k, float kernel_value = 0.0f, float eps = 1e-5f) {
  ConvParams p;
  p.kernel = Tensor(c_out, c_in, k, k);
  if (kernel_value != 0.0f) {
    for (int c = 0; c < c_out; ++c) {
      p.kernel.at(c, std::min(c, c_in - 1), k / 2, k / 2) = kernel_value;
    }
  }
  p.stride = 1;
  p.padding = (k - 1) / 2;
  p.bn_gamma.assign(static_cast<std::size_t>(c_out), 1.0f);
  p.bn_beta.assign(static_cast<std::size_t>(c_out), 0.0f);
  p.bn_mean.assign(static_cast<std::size_t>(c_out), 0.0f);
  p.bn_var.assign(static_cast<std::size_t>(c_out), 1.0f);
  p.bn_eps = eps;
  return p;
}

}  // namespace

TEST_SUITE("refnet") {

TEST_CASE("cbl: identity kernel and neutral bn apply only the leaky slope") {
  Tensor x = Tensor::full(1, 1, 1, 1, -1.0f);

  // Exact with eps 0: leaky(-1) = -0.1.
  ConvParams exact = neutral(1, 1, 1, 1.0f, 0.0f);
  CHECK(refnet::cbl_forward(x, exact).at(0, 0, 0, 0) == -0.1f);

  // Default eps 1e-5 only perturbs at the 1e-6 level.
  ConvParams conventional = neutral(1, 1, 1, 1.0f);
  CHECK(std::abs(refnet::cbl_forward(x, conventional).at(0, 0, 0, 0) - (-0.1)) <= 1e-6);
}

TEST_CASE("cbl: zero input with zero beta stays zero") {
  Tensor x(1, 2, 4, 4);
  const Tensor y = refnet::cbl_forward(x, neutral(2, 3, 3));
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("cbl: stride-2 3x3 on 64x64 lands on 32x32 with 16 channels") {
  Tensor x(1, 3, 64, 64);
  ConvParams p = neutral(3, 16, 3);
  p.stride = 2;
  const Tensor y = refnet::cbl_forward(x, p);
  CHECK(y.dims() == std::array<int, 4>{1, 16, 32, 32});
}

TEST_CASE("cbl parameter validation") {
  Tensor x(1, 2, 4, 4);
  ConvParams even_kernel = neutral(2, 2, 3);
  even_kernel.kernel = Tensor(2, 2, 2, 2);
  CHECK_THROWS_AS(refnet::cbl_forward(x, even_kernel), ContractError);

  ConvParams bad_var = neutral(2, 2, 1);
  bad_var.bn_var[0] = 0.0f;
  CHECK_THROWS_AS(refnet::cbl_forward(x, bad_var), ContractError);

  ConvParams mismatched = neutral(3, 2, 1);  // expects 3 input channels
  CHECK_THROWS_AS(refnet::cbl_forward(x, mismatched), ContractError);
}

TEST_CASE("res unit: zero inner weights give the identity") {
  Tensor x(1, 4, 6, 6);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x.data()[i] = static_cast<float>(i) * 0.37f - 40.0f;
  }
  ResUnitParams p{neutral(4, 2, 1), neutral(2, 4, 3)};
  const Tensor y = refnet::res_unit_forward(x, p);
  CHECK(y.data() == x.data());
  CHECK(y.dims() == x.dims());
}

TEST_CASE("res unit: single-pixel hand computation") {
  // x = 2; reduce 1x1 weight 3 -> 6; expand 3x3 center weight 0.5 -> 3;
  // output 2 + 3 = 5 (eps 0 keeps it exact).
  Tensor x = Tensor::full(1, 1, 1, 1, 2.0f);
  ResUnitParams p{neutral(1, 1, 1, 3.0f, 0.0f), neutral(1, 1, 3, 0.5f, 0.0f)};
  CHECK(refnet::res_unit_forward(x, p).at(0, 0, 0, 0) == 5.0f);
}

TEST_CASE("res unit rejects shape-changing inner paths") {
  Tensor x(1, 4, 6, 6);
  ResUnitParams p{neutral(4, 2, 1), neutral(2, 5, 3)};  // 4 -> 5 channels
  CHECK_THROWS_AS(refnet::res_unit_forward(x, p), ContractError);
}

TEST_CASE("csp with zero weights emits per-channel beta constants") {
  Tensor x = Tensor::full(1, 4, 5, 5, 1.25f);
  for (CspVariant variant : {CspVariant::Csp1, CspVariant::Csp2}) {
    CspParams p;
    p.variant = variant;
    p.stem = neutral(4, 2, 1);
    p.units.push_back({neutral(2, 1, 1), neutral(1, 2, 3)});
    p.shortcut.kernel = Tensor(2, 4, 1, 1);
    p.fuse = neutral(4, 3, 1, 0.0f, 0.0f);
    p.fuse.bn_beta = {0.3f, -0.2f, 0.0f};

    const Tensor y = refnet::csp_forward(x, p);
    CHECK(y.dims() == std::array<int, 4>{1, 3, 5, 5});
    for (int iy = 0; iy < y.h(); ++iy) {
      for (int ix = 0; ix < y.w(); ++ix) {
        CHECK(y.at(0, 0, iy, ix) == 0.3f);
        CHECK(y.at(0, 1, iy, ix) == -0.2f * 0.1f);  // leaky on a negative beta
        CHECK(y.at(0, 2, iy, ix) == 0.0f);
      }
    }
  }
}

TEST_CASE("csp preserves spatial dims for any depth") {
  Tensor x(2, 4, 7, 9);
  for (int depth = 1; depth <= 3; ++depth) {
    CspParams p;
    p.stem = neutral(4, 2, 1);
    for (int i = 0; i < depth; ++i) {
      p.units.push_back({neutral(2, 1, 1), neutral(1, 2, 3)});
    }
    p.shortcut.kernel = Tensor(2, 4, 1, 1);
    p.fuse = neutral(4, 6, 1);
    const Tensor y = refnet::csp_forward(x, p);
    CHECK(y.dims() == std::array<int, 4>{2, 6, 7, 9});
  }
}

TEST_CASE("csp needs at least one unit and matching fuse width") {
  Tensor x(1, 4, 5, 5);
  CspParams p;
  p.stem = neutral(4, 2, 1);
  p.shortcut.kernel = Tensor(2, 4, 1, 1);
  p.fuse = neutral(4, 3, 1);
  CHECK_THROWS_AS(refnet::csp_forward(x, p), ContractError);

  p.units.push_back({neutral(2, 1, 1), neutral(1, 2, 3)});
  p.fuse = neutral(5, 3, 1);  // concat is 4 channels, not 5
  CHECK_THROWS_AS(refnet::csp_forward(x, p), ContractError);
}

TEST_CASE("focus slicing: shape and declared order") {
  Tensor x(1, 3, 4, 4);
  CHECK(refnet::focus_slice(x).dims() == std::array<int, 4>{1, 12, 2, 2});

  // [[a, b], [c, d]] -> slices [a], [c], [b], [d].
  Tensor tiny(1, 1, 2, 2);
  tiny.at(0, 0, 0, 0) = 1.0f;  // a
  tiny.at(0, 0, 0, 1) = 2.0f;  // b
  tiny.at(0, 0, 1, 0) = 3.0f;  // c
  tiny.at(0, 0, 1, 1) = 4.0f;  // d
  const Tensor sliced = refnet::focus_slice(tiny);
  CHECK(sliced.at(0, 0, 0, 0) == 1.0f);
  CHECK(sliced.at(0, 1, 0, 0) == 3.0f);
  CHECK(sliced.at(0, 2, 0, 0) == 2.0f);
  CHECK(sliced.at(0, 3, 0, 0) == 4.0f);
}

TEST_CASE("focus slice is a permutation of its input") {
  Tensor x(2, 3, 8, 6);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(i) * 0.613f;
  const Tensor sliced = refnet::focus_slice(x);
  auto a = x.data();
  auto b = sliced.data();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("focus rejects odd spatial dims") {
  CHECK_THROWS_AS(refnet::focus_slice(Tensor(1, 1, 3, 4)), ContractError);
  CHECK_THROWS_AS(refnet::focus_slice(Tensor(1, 1, 4, 5)), ContractError);
  refnet::FocusParams p{neutral(4, 2, 1)};
  CHECK_THROWS_AS(refnet::focus_forward(Tensor(1, 1, 5, 5), p), ContractError);
}

TEST_CASE("spp: constant input, concat shape, peak replication") {
  const Tensor constant = Tensor::full(1, 2, 6, 6, -3.5f);
  const Tensor pooled = refnet::spp_pool_concat(constant);
  CHECK(pooled.dims() == std::array<int, 4>{1, 8, 6, 6});
  for (float v : pooled.data()) CHECK(v == -3.5f);

  // A single positive peak in a 9x9 zero field: the 5x5 branch replicates it
  // over the 5x5 neighborhood around the center.
  Tensor peak(1, 1, 9, 9);
  peak.at(0, 0, 4, 4) = 7.0f;
  const Tensor p = refnet::spp_pool_concat(peak);
  for (int iy = 0; iy < 9; ++iy) {
    for (int ix = 0; ix < 9; ++ix) {
      const float expected =
          (std::abs(iy - 4) <= 2 && std::abs(ix - 4) <= 2) ? 7.0f : 0.0f;
      CHECK(p.at(0, 1, iy, ix) == expected);  // channel block 1 = 5x5 pool
    }
  }
}

TEST_CASE("spp forward projects back to the declared width") {
  Tensor x(1, 4, 6, 6);
  refnet::SppParams p{neutral(16, 4, 1)};
  CHECK(refnet::spp_forward(x, p).dims() == std::array<int, 4>{1, 4, 6, 6});
}

TEST_CASE("panet fuse: shape contract and zero-path reduction") {
  Tensor p_low(1, 4, 64, 64);
  Tensor p_high(1, 4, 32, 32);
  for (std::size_t i = 0; i < p_high.size(); ++i) {
    p_high.data()[i] = static_cast<float>(i % 97) * 0.01f;  // non-negative
  }

  refnet::PanetFuseParams params;
  params.downsample = neutral(4, 4, 3);  // zero kernel -> zero path
  params.downsample.stride = 2;
  params.project = neutral(8, 4, 1, 0.0f, 0.0f);
  // Identity projection from the p_high half of the concat.
  for (int c = 0; c < 4; ++c) params.project.kernel.at(c, 4 + c, 0, 0) = 1.0f;

  const Tensor fused = refnet::panet_fuse(p_high, p_low, params);
  CHECK(fused.dims() == std::array<int, 4>{1, 4, 32, 32});
  CHECK(fused.data() == p_high.data());
  CHECK(params.project.kernel.c() == 4 + 4);  // downsampled + same-stage channels

  CHECK_THROWS_AS(refnet::panet_fuse(p_high, Tensor(1, 4, 60, 60), params), ContractError);
  CHECK_THROWS_AS(refnet::panet_fuse(p_high, p_high, params), ContractError);
}

TEST_CASE("backbone emits stride 8/16/32 maps for 512 input") {
  refnet::BackboneConfig config;
  config.base_width = 2;
  const auto params = refnet::random_backbone_params(config, 3);
  const auto feats = refnet::backbone_forward(Tensor(1, 3, 512, 512), params);
  CHECK(feats.p3.dims() == std::array<int, 4>{1, 8, 64, 64});
  CHECK(feats.p4.dims() == std::array<int, 4>{1, 16, 32, 32});
  CHECK(feats.p5.dims() == std::array<int, 4>{1, 32, 16, 16});
}

TEST_CASE("backbone desk-scale input and the multiple-of-32 contract") {
  refnet::BackboneConfig config;
  config.base_width = 4;
  const auto params = refnet::random_backbone_params(config, 5);
  const auto feats = refnet::backbone_forward(Tensor(1, 3, 64, 64), params);
  CHECK(feats.p3.dims() == std::array<int, 4>{1, 16, 8, 8});
  CHECK(feats.p4.dims() == std::array<int, 4>{1, 32, 4, 4});
  CHECK(feats.p5.dims() == std::array<int, 4>{1, 64, 2, 2});

  CHECK_THROWS_AS(refnet::backbone_forward(Tensor(1, 3, 500, 500), params), ContractError);
}

TEST_CASE("seeded weights are reproducible and seed-sensitive") {
  refnet::BackboneConfig config;
  config.base_width = 4;
  const auto a = refnet::random_backbone_params(config, 11);
  const auto b = refnet::random_backbone_params(config, 11);
  const auto c = refnet::random_backbone_params(config, 12);
  CHECK(a.down1.kernel.data() == b.down1.kernel.data());
  CHECK(a.csp2.fuse.bn_beta == b.csp2.fuse.bn_beta);
  CHECK(a.down1.kernel.data() != c.down1.kernel.data());

  Tensor x(1, 3, 32, 32);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(i % 13) * 0.1f;
  const auto fa = refnet::backbone_forward(x, a);
  const auto fb = refnet::backbone_forward(x, b);
  CHECK(fa.p5.data() == fb.p5.data());
}

TEST_CASE("invariant suite passes on a handful of seeds") {
  refnet::InvariantConfig config;
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    for (const auto& result : refnet::run_invariant_suite(config, seed)) {
      INFO(result.name, ": ", result.message);
      CHECK(result.passed);
    }
  }
}

TEST_CASE("invariant suite surfaces contract errors as failures") {
  refnet::InvariantConfig config;
  config.input = {1, 3, 63, 63};  // odd: focus must reject it
  const auto results = refnet::run_invariant_suite(config, 0);
  bool found_focus_failure = false;
  for (const auto& r : results) {
    if (r.name == "focus-permutation") {
      found_focus_failure = !r.passed;
      CHECK(!r.message.empty());
    }
  }
  CHECK(found_focus_failure);
}

}  // TEST_SUITE
