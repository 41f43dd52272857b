#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "radeval/error.hpp"
#include "radeval/refnet.hpp"

namespace radeval::refnet {

namespace {

std::string dims_str(const Tensor& t) {
  return "(" + std::to_string(t.n()) + ", " + std::to_string(t.c()) + ", " +
         std::to_string(t.h()) + ", " + std::to_string(t.w()) + ")";
}

Tensor random_input(const std::array<int, 4>& dims, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  Tensor t(dims[0], dims[1], dims[2], dims[3]);
  for (auto& v : t.data()) {
    v = static_cast<float>(static_cast<double>(engine() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  }
  return t;
}

ConvParams neutral_cbl(int c_in, int c_out, int k, bool zero_kernel) {
  ConvParams p;
  p.kernel = Tensor(c_out, c_in, k, k);
  if (!zero_kernel) {
    // Identity-ish: pass channel 0 through the kernel center.
    for (int c = 0; c < c_out; ++c) {
      p.kernel.at(c, std::min(c, c_in - 1), k / 2, k / 2) = 1.0f;
    }
  }
  p.stride = 1;
  p.padding = (k - 1) / 2;
  p.bn_gamma.assign(static_cast<std::size_t>(c_out), 1.0f);
  p.bn_beta.assign(static_cast<std::size_t>(c_out), 0.0f);
  p.bn_mean.assign(static_cast<std::size_t>(c_out), 0.0f);
  p.bn_var.assign(static_cast<std::size_t>(c_out), 1.0f);
  return p;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

/// Undoes focus_slice; used to show the slicing is a pure rearrangement.
Tensor focus_unslice(const Tensor& y) {
  const int c = y.c() / 4;
  Tensor x(y.n(), c, y.h() * 2, y.w() * 2);
  static constexpr int kOffsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int n = 0; n < y.n(); ++n) {
    for (int s = 0; s < 4; ++s) {
      for (int ci = 0; ci < c; ++ci) {
        for (int iy = 0; iy < y.h(); ++iy) {
          for (int ix = 0; ix < y.w(); ++ix) {
            x.at(n, ci, 2 * iy + kOffsets[s][0], 2 * ix + kOffsets[s][1]) =
                y.at(n, s * c + ci, iy, ix);
          }
        }
      }
    }
  }
  return x;
}

}  // namespace

std::vector<InvariantResult> run_invariant_suite(const InvariantConfig& config,
                                                 std::uint64_t seed) {
  struct Check {
    std::string name;
    std::function<void()> body;
  };

  const auto& in = config.input;
  std::vector<Check> checks;

  checks.push_back({"cbl-output-shape", [&, seed] {
    Tensor x = random_input({2, 3, 17, 13}, seed);
    struct Case {
      int k, stride, pad;
    };
    for (const Case& c : {Case{1, 1, 0}, Case{3, 2, 1}, Case{5, 1, 2}}) {
      ConvParams p = neutral_cbl(3, 6, c.k, false);
      p.stride = c.stride;
      p.padding = c.pad;
      Tensor y = cbl_forward(x, p);
      const int eh = (x.h() + 2 * c.pad - c.k) / c.stride + 1;
      const int ew = (x.w() + 2 * c.pad - c.k) / c.stride + 1;
      require(y.n() == x.n() && y.c() == 6 && y.h() == eh && y.w() == ew,
              "cbl output " + dims_str(y) + " off contract for k=" + std::to_string(c.k));
    }
  }});

  checks.push_back({"focus-permutation", [&, seed] {
    Tensor x = random_input(in, seed);
    Tensor sliced = focus_slice(x);
    require(sliced.n() == x.n() && sliced.c() == 4 * x.c() && sliced.h() == x.h() / 2 &&
                sliced.w() == x.w() / 2,
            "focus slice shape " + dims_str(sliced) + " off contract");
    std::vector<float> a = x.data();
    std::vector<float> b = sliced.data();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    require(a == b, "focus slice is not a permutation of its input");
    Tensor restored = focus_unslice(sliced);
    require(restored.data() == x.data(), "inverse interleave did not recover the input");
  }});

  checks.push_back({"spp-constant-and-shape", [&, seed] {
    Tensor constant = Tensor::full(1, 3, 12, 12, 2.5f);
    Tensor pooled = spp_pool_concat(constant);
    require(pooled.n() == 1 && pooled.c() == 12 && pooled.h() == 12 && pooled.w() == 12,
            "spp pre-projection shape " + dims_str(pooled) + " off contract");
    for (float v : pooled.data()) {
      require(v == 2.5f, "spp on constant input produced a non-constant value");
    }
    Tensor x = random_input({1, 2, 9, 9}, seed + 1);
    Tensor pooled_rand = spp_pool_concat(x);
    for (int c = 0; c < x.c(); ++c) {
      for (int iy = 0; iy < x.h(); ++iy) {
        for (int ix = 0; ix < x.w(); ++ix) {
          require(pooled_rand.at(0, c, iy, ix) == x.at(0, c, iy, ix),
                  "spp identity branch altered the input");
          for (int s = 1; s < 4; ++s) {
            require(pooled_rand.at(0, s * x.c() + c, iy, ix) >= x.at(0, c, iy, ix),
                    "max pool fell below the input pointwise");
          }
        }
      }
    }
  }});

  checks.push_back({"res-unit-zero-identity", [&, seed] {
    Tensor x = random_input({1, 4, 8, 8}, seed + 2);
    ResUnitParams p;
    p.reduce = neutral_cbl(4, 2, 1, true);
    p.expand = neutral_cbl(2, 4, 3, true);
    Tensor y = res_unit_forward(x, p);
    require(y.data() == x.data(), "zero-weight res unit is not the identity");
  }});

  checks.push_back({"csp-shape", [&, seed] {
    Tensor x = random_input({1, 8, 10, 10}, seed + 3);
    for (CspVariant variant : {CspVariant::Csp1, CspVariant::Csp2}) {
      CspParams p;
      p.variant = variant;
      p.stem = neutral_cbl(8, 4, 1, false);
      p.units.push_back({neutral_cbl(4, 2, 1, false), neutral_cbl(2, 4, 3, false)});
      p.units.push_back({neutral_cbl(4, 2, 1, false), neutral_cbl(2, 4, 3, false)});
      p.shortcut.kernel = Tensor(4, 8, 1, 1);
      p.fuse = neutral_cbl(8, 10, 1, false);
      Tensor y = csp_forward(x, p);
      require(y.n() == x.n() && y.h() == x.h() && y.w() == x.w(),
              "csp changed spatial dims to " + dims_str(y));
      require(y.c() == p.fuse.kernel.n(), "csp output channels off contract");
      require(p.fuse.kernel.c() == p.stem.kernel.n() + p.shortcut.kernel.n(),
              "csp concat width is not the sum of both paths");
    }
  }});

  checks.push_back({"backbone-strides", [&, seed] {
    Tensor image = random_input(in, seed + 5);
    BackboneParams params = random_backbone_params(config.backbone, seed);
    PyramidFeatures feats = backbone_forward(image, params);
    const int w = config.backbone.base_width;
    require(feats.p3.h() == in[2] / 8 && feats.p3.w() == in[3] / 8 && feats.p3.c() == 4 * w,
            "p3 " + dims_str(feats.p3) + " is not the stride-8 map");
    require(feats.p4.h() == in[2] / 16 && feats.p4.w() == in[3] / 16 && feats.p4.c() == 8 * w,
            "p4 " + dims_str(feats.p4) + " is not the stride-16 map");
    require(feats.p5.h() == in[2] / 32 && feats.p5.w() == in[3] / 32 && feats.p5.c() == 16 * w,
            "p5 " + dims_str(feats.p5) + " is not the stride-32 map");
  }});

  checks.push_back({"panet-fuse-shape", [&, seed] {
    BackboneParams params = random_backbone_params(config.backbone, seed);
    Tensor image = random_input(in, seed + 6);
    PyramidFeatures feats = backbone_forward(image, params);
    PanetFuseParams fuse;
    fuse.downsample = neutral_cbl(feats.p3.c(), feats.p4.c(), 3, false);
    fuse.downsample.stride = 2;
    fuse.project = neutral_cbl(2 * feats.p4.c(), feats.p4.c(), 1, false);
    Tensor fused = panet_fuse(feats.p4, feats.p3, fuse);
    require(fused.h() == feats.p4.h() && fused.w() == feats.p4.w(),
            "panet fuse left the high level's grid: " + dims_str(fused));
  }});

  checks.push_back({"determinism", [&, seed] {
    Tensor image = random_input(in, seed + 7);
    BackboneParams params = random_backbone_params(config.backbone, seed);
    PyramidFeatures a = backbone_forward(image, params);
    PyramidFeatures b = backbone_forward(image, params);
    require(a.p3.data() == b.p3.data() && a.p4.data() == b.p4.data() &&
                a.p5.data() == b.p5.data(),
            "identical inputs and weights did not give bit-identical outputs");
  }});

  std::vector<InvariantResult> results;
  for (auto& check : checks) {
    InvariantResult r;
    r.name = check.name;
    try {
      check.body();
      r.passed = true;
    } catch (const std::exception& e) {
      r.passed = false;
      r.message = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace radeval::refnet
