#include "radeval/refnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "radeval/error.hpp"

namespace radeval::refnet {

namespace {

std::string dims_str(const Tensor& t) {
  return "(" + std::to_string(t.n()) + ", " + std::to_string(t.c()) + ", " +
         std::to_string(t.h()) + ", " + std::to_string(t.w()) + ")";
}

void check_conv_params(const ConvParams& p) {
  const int c_out = p.kernel.n();
  const int k = p.kernel.h();
  if (k != p.kernel.w() || k % 2 == 0) {
    throw ContractError("conv kernel must be square with odd size, got " + dims_str(p.kernel));
  }
  if (p.stride <= 0 || p.padding < 0) {
    throw ContractError("conv stride must be positive and padding non-negative");
  }
  const std::size_t n = static_cast<std::size_t>(c_out);
  if (p.bn_gamma.size() != n || p.bn_beta.size() != n || p.bn_mean.size() != n ||
      p.bn_var.size() != n) {
    throw ContractError("batch-norm vectors must have one entry per output channel");
  }
  for (float v : p.bn_var) {
    if (!(v > 0.0f)) throw ContractError("batch-norm variance must be positive");
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding) {
  if (kernel.c() != x.c()) {
    throw ContractError("conv input channels " + std::to_string(x.c()) +
                        " do not match kernel " + dims_str(kernel));
  }
  const int k = kernel.h();
  const int out_h = (x.h() + 2 * padding - k) / stride + 1;
  const int out_w = (x.w() + 2 * padding - k) / stride + 1;
  if (out_h <= 0 || out_w <= 0) {
    throw ContractError("conv output would be empty for input " + dims_str(x));
  }

  Tensor y(x.n(), kernel.n(), out_h, out_w);
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < kernel.n(); ++co) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          float acc = 0.0f;
          for (int ci = 0; ci < x.c(); ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= x.h()) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= x.w()) continue;
                acc += x.at(n, ci, iy, ix) * kernel.at(co, ci, ky, kx);
              }
            }
          }
          y.at(n, co, oy, ox) = acc;
        }
      }
    }
  }
  return y;
}

Tensor cbl_forward(const Tensor& x, const ConvParams& p) {
  check_conv_params(p);
  Tensor y = conv2d(x, p.kernel, p.stride, p.padding);
  for (int n = 0; n < y.n(); ++n) {
    for (int c = 0; c < y.c(); ++c) {
      const float inv_std = 1.0f / std::sqrt(p.bn_var[static_cast<std::size_t>(c)] + p.bn_eps);
      const float gamma = p.bn_gamma[static_cast<std::size_t>(c)];
      const float beta = p.bn_beta[static_cast<std::size_t>(c)];
      const float mean = p.bn_mean[static_cast<std::size_t>(c)];
      for (int iy = 0; iy < y.h(); ++iy) {
        for (int ix = 0; ix < y.w(); ++ix) {
          float v = (y.at(n, c, iy, ix) - mean) * inv_std * gamma + beta;
          if (v < 0.0f) v *= p.leaky_slope;
          y.at(n, c, iy, ix) = v;
        }
      }
    }
  }
  return y;
}

namespace {

Tensor unit_inner(const Tensor& x, const ResUnitParams& p) {
  return cbl_forward(cbl_forward(x, p.reduce), p.expand);
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ContractError("channel concat needs matching batch and spatial dims, got " +
                        dims_str(a) + " vs " + dims_str(b));
  }
  Tensor y(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int n = 0; n < y.n(); ++n) {
    for (int c = 0; c < y.c(); ++c) {
      const Tensor& src = c < a.c() ? a : b;
      const int sc = c < a.c() ? c : c - a.c();
      for (int iy = 0; iy < y.h(); ++iy) {
        for (int ix = 0; ix < y.w(); ++ix) {
          y.at(n, c, iy, ix) = src.at(n, sc, iy, ix);
        }
      }
    }
  }
  return y;
}

}  // namespace

Tensor res_unit_forward(const Tensor& x, const ResUnitParams& p) {
  Tensor inner = unit_inner(x, p);
  if (!inner.same_dims(x)) {
    throw ContractError("res unit inner path changed shape from " + dims_str(x) + " to " +
                        dims_str(inner));
  }
  for (std::size_t i = 0; i < inner.size(); ++i) {
    inner.data()[i] += x.data()[i];
  }
  return inner;
}

Tensor csp_forward(const Tensor& x, const CspParams& p) {
  if (p.units.empty()) throw ContractError("csp block needs at least one unit");

  Tensor a = cbl_forward(x, p.stem);
  for (const auto& unit : p.units) {
    a = p.variant == CspVariant::Csp1 ? res_unit_forward(a, unit) : unit_inner(a, unit);
  }

  if (p.shortcut.kernel.h() != 1 || p.shortcut.kernel.w() != 1) {
    throw ContractError("csp shortcut must be a 1x1 conv");
  }
  Tensor b = conv2d(x, p.shortcut.kernel, 1, 0);

  return cbl_forward(concat_channels(a, b), p.fuse);
}

Tensor focus_slice(const Tensor& x) {
  if (x.h() % 2 != 0 || x.w() % 2 != 0) {
    throw ContractError("focus needs even spatial dims, got " + dims_str(x));
  }
  const int oh = x.h() / 2;
  const int ow = x.w() / 2;
  Tensor y(x.n(), 4 * x.c(), oh, ow);
  // Parity offsets (row, col) in the declared slice order.
  static constexpr int kOffsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int n = 0; n < x.n(); ++n) {
    for (int s = 0; s < 4; ++s) {
      for (int c = 0; c < x.c(); ++c) {
        for (int iy = 0; iy < oh; ++iy) {
          for (int ix = 0; ix < ow; ++ix) {
            y.at(n, s * x.c() + c, iy, ix) =
                x.at(n, c, 2 * iy + kOffsets[s][0], 2 * ix + kOffsets[s][1]);
          }
        }
      }
    }
  }
  return y;
}

Tensor focus_forward(const Tensor& x, const FocusParams& p) {
  return cbl_forward(focus_slice(x), p.conv);
}

namespace {

Tensor max_pool_same(const Tensor& x, int k) {
  const int pad = (k - 1) / 2;
  Tensor y(x.n(), x.c(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int oy = 0; oy < x.h(); ++oy) {
        for (int ox = 0; ox < x.w(); ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy - pad + ky;
            if (iy < 0 || iy >= x.h()) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox - pad + kx;
              if (ix < 0 || ix >= x.w()) continue;
              best = std::max(best, x.at(n, c, iy, ix));
            }
          }
          y.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return y;
}

}  // namespace

Tensor spp_pool_concat(const Tensor& x) {
  Tensor out = max_pool_same(x, 1);
  for (int k : {5, 9, 13}) {
    out = concat_channels(out, max_pool_same(x, k));
  }
  return out;
}

Tensor spp_forward(const Tensor& x, const SppParams& p) {
  return cbl_forward(spp_pool_concat(x), p.project);
}

Tensor panet_fuse(const Tensor& p_high, const Tensor& p_low, const PanetFuseParams& p) {
  if (p_low.h() != 2 * p_high.h() || p_low.w() != 2 * p_high.w() || p_low.n() != p_high.n()) {
    throw ContractError("panet fuse needs adjacent pyramid levels, got low " + dims_str(p_low) +
                        " vs high " + dims_str(p_high));
  }
  Tensor down = cbl_forward(p_low, p.downsample);
  if (down.h() != p_high.h() || down.w() != p_high.w()) {
    throw ContractError("panet downsample did not land on the high level's grid");
  }
  return cbl_forward(concat_channels(down, p_high), p.project);
}

PyramidFeatures backbone_forward(const Tensor& image, const BackboneParams& params) {
  if (image.h() % 32 != 0 || image.w() % 32 != 0) {
    throw ContractError("backbone input dims must be multiples of 32, got " + dims_str(image));
  }
  Tensor x = focus_forward(image, params.focus);      // stride 2
  x = cbl_forward(x, params.down1);                   // stride 4
  x = csp_forward(x, params.csp1);
  x = cbl_forward(x, params.down2);                   // stride 8
  PyramidFeatures out;
  out.p3 = csp_forward(x, params.csp2);
  x = cbl_forward(out.p3, params.down3);              // stride 16
  out.p4 = csp_forward(x, params.csp3);
  x = cbl_forward(out.p4, params.down4);              // stride 32
  out.p5 = spp_forward(x, params.spp);
  return out;
}

namespace {

/// Seeded generator with an explicit uint64 -> double mapping; the standard
/// distributions are implementation-defined and would break cross-platform
/// reproducibility.
class WeightRng {
 public:
  explicit WeightRng(std::uint64_t seed) : engine_(seed) {}

  float uniform(float lo, float hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return static_cast<float>(lo + (hi - lo) * u);
  }

 private:
  std::mt19937_64 engine_;
};

Tensor random_kernel(WeightRng& rng, int c_out, int c_in, int k) {
  Tensor kernel(c_out, c_in, k, k);
  const float bound = 0.5f / static_cast<float>(c_in * k * k);
  for (auto& v : kernel.data()) v = rng.uniform(-bound, bound);
  return kernel;
}

ConvParams random_cbl(WeightRng& rng, int c_in, int c_out, int k, int stride) {
  ConvParams p;
  p.kernel = random_kernel(rng, c_out, c_in, k);
  p.stride = stride;
  p.padding = (k - 1) / 2;
  p.bn_gamma.resize(static_cast<std::size_t>(c_out));
  p.bn_beta.resize(static_cast<std::size_t>(c_out));
  p.bn_mean.resize(static_cast<std::size_t>(c_out));
  p.bn_var.resize(static_cast<std::size_t>(c_out));
  for (int c = 0; c < c_out; ++c) {
    p.bn_gamma[static_cast<std::size_t>(c)] = rng.uniform(0.5f, 1.5f);
    p.bn_beta[static_cast<std::size_t>(c)] = rng.uniform(-0.1f, 0.1f);
    p.bn_mean[static_cast<std::size_t>(c)] = rng.uniform(-0.1f, 0.1f);
    p.bn_var[static_cast<std::size_t>(c)] = rng.uniform(0.5f, 1.5f);
  }
  return p;
}

ResUnitParams random_res_unit(WeightRng& rng, int channels) {
  ResUnitParams p;
  const int mid = std::max(1, channels / 2);
  p.reduce = random_cbl(rng, channels, mid, 1, 1);
  p.expand = random_cbl(rng, mid, channels, 3, 1);
  return p;
}

CspParams random_csp(WeightRng& rng, int c_in, int c_out, int depth, CspVariant variant) {
  CspParams p;
  p.variant = variant;
  const int split = std::max(1, c_out / 2);
  p.stem = random_cbl(rng, c_in, split, 1, 1);
  for (int i = 0; i < depth; ++i) p.units.push_back(random_res_unit(rng, split));
  p.shortcut.kernel = random_kernel(rng, split, c_in, 1);
  p.fuse = random_cbl(rng, 2 * split, c_out, 1, 1);
  return p;
}

}  // namespace

BackboneParams random_backbone_params(const BackboneConfig& config, std::uint64_t seed) {
  if (config.base_width <= 0) throw ContractError("base width must be positive");
  for (int d : config.csp_depths) {
    if (d < 1) throw ContractError("csp depths must be at least 1");
  }
  WeightRng rng(seed);
  const int w = config.base_width;
  BackboneParams p;
  p.config = config;
  p.focus.conv = random_cbl(rng, 12, w, 3, 1);
  p.down1 = random_cbl(rng, w, 2 * w, 3, 2);
  p.csp1 = random_csp(rng, 2 * w, 2 * w, config.csp_depths[0], CspVariant::Csp1);
  p.down2 = random_cbl(rng, 2 * w, 4 * w, 3, 2);
  p.csp2 = random_csp(rng, 4 * w, 4 * w, config.csp_depths[1], CspVariant::Csp1);
  p.down3 = random_cbl(rng, 4 * w, 8 * w, 3, 2);
  p.csp3 = random_csp(rng, 8 * w, 8 * w, config.csp_depths[2], CspVariant::Csp1);
  p.down4 = random_cbl(rng, 8 * w, 16 * w, 3, 2);
  p.spp.project = random_cbl(rng, 64 * w, 16 * w, 1, 1);
  return p;
}

}  // namespace radeval::refnet
