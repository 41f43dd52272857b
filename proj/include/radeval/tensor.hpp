#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace radeval {

/// Dense row-major N x C x H x W array of 32-bit floats.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w);  // zero-filled; dims must be positive
  static Tensor full(int n, int c, int h, int w, float value);

  int n() const { return dims_[0]; }
  int c() const { return dims_[1]; }
  int h() const { return dims_[2]; }
  int w() const { return dims_[3]; }
  std::array<int, 4> dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

  float at(int in, int ic, int iy, int ix) const { return data_[index(in, ic, iy, ix)]; }
  float& at(int in, int ic, int iy, int ix) { return data_[index(in, ic, iy, ix)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

 private:
  std::size_t index(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * dims_[1] + ic) * dims_[2] + iy) * dims_[3] + ix;
  }

  std::array<int, 4> dims_{0, 0, 0, 0};
  std::vector<float> data_;
};

}  // namespace radeval
