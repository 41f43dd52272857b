#include "radeval/tensor.hpp"

#include <string>

#include "radeval/error.hpp"

namespace radeval {

Tensor::Tensor(int n, int c, int h, int w) : dims_{n, c, h, w} {
  if (n <= 0 || c <= 0 || h <= 0 || w <= 0) {
    throw ContractError("tensor dims must be positive, got (" + std::to_string(n) + ", " +
                        std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) +
                        ")");
  }
  data_.assign(static_cast<std::size_t>(n) * c * h * w, 0.0f);
}

Tensor Tensor::full(int n, int c, int h, int w, float value) {
  Tensor t(n, c, h, w);
  t.data_.assign(t.data_.size(), value);
  return t;
}

}  // namespace radeval
