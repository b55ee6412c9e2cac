#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "ctsplat/common.hpp"

namespace ctsplat::ad {

// Row-major 2D tensor with a gradient buffer of the same shape.
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;
  std::vector<double> g;
  bool requires_grad = true;

  size_t size() const { return v.size(); }
  double& val(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double val(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  double& grad(int r, int c) { return g[static_cast<size_t>(r) * cols + c]; }
};

// Reverse-mode tape over tensor primitives. One tape instance covers one
// forward/backward pass; parameters live outside and are copied in as leaves.
// Custom operations (rendering, hash interpolation, attention, descriptors)
// record closures via `record`.
class Tape {
 public:
  int leaf(int rows, int cols, const double* data, bool requires_grad = true);
  int leaf(int rows, int cols, const std::vector<double>& data, bool requires_grad = true);
  // Uninitialized output tensor for custom ops.
  int alloc(int rows, int cols, bool requires_grad = true);

  Tensor& at(int id) { return tensors_[id]; }
  const Tensor& at(int id) const { return tensors_[id]; }
  double value(int id) const { return tensors_[id].v[0]; }

  // Registers a backward closure. Skipped when no input needs gradients or
  // when recording is off (inference).
  void record(const std::vector<int>& inputs, int out, std::function<void(Tape&)> fn);
  bool recording = true;

  void backward(int loss_id);

  // --- structured ops ------------------------------------------------------
  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int add_rowvec(int a, int bias);  // bias: 1 x cols, broadcast over rows
  int scale(int a, double s);
  int add_scalar(int a, double c);
  int tanh_op(int a);
  int abs_op(int a);
  int sum_all(int a);   // 1x1
  int mean_all(int a);  // 1x1
  int softmax_rows(int a);
  int normalize_rows(int a);
  // Per-column clamp; gradient masked outside [lo, hi].
  int clamp_cols(int a, std::vector<double> lo, std::vector<double> hi);
  // x * s[col] + o[col]
  int affine_cols(int a, std::vector<double> s, std::vector<double> o);
  int concat_cols(int a, int b);
  // out[e] = in.v[flat_idx[e]]; backward scatter-adds.
  int gather(int a, std::vector<int> flat_idx, int out_rows, int out_cols);
  // Valid-mode 2D correlation with a fixed kernel (treats `a` as rows x cols
  // image, kernel kh x kw row-major).
  int conv2d_valid(int a, std::vector<double> kernel, int kh, int kw);

 private:
  struct Node {
    int out;
    std::function<void(Tape&)> backward;
  };
  int push(Tensor t);
  std::deque<Tensor> tensors_;
  std::vector<Node> nodes_;
};

}  // namespace ctsplat::ad
