#pragma once

#include <utility>
#include <vector>

#include "stereovid/tensor.hpp"

namespace stereovid {

// Dense numeric kernels shared by the whole pipeline. All functions are pure:
// identical inputs give bit-identical outputs regardless of thread count
// (parallel loops only ever write disjoint output slices).

/// Cross-correlation of input [C,H,W] with kernel [O,C,kh,kw], zero padding.
/// Output extents: (H + 2*padding - kh)/stride + 1, analogously for W.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int stride, int padding);

/// Stride-1 3D cross-correlation of input [C,T,H,W] with kernel [O,C,kt,kh,kw]
/// under the given zero paddings.
Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int pad_t, int pad_h, int pad_w);

// Factored 3D convolution: a width-only kernel [C1,C,1,1,kw], a time-only
// kernel [C2,C1,kt,1,1] and a height-width kernel [O,C2,1,kh,kw2], applied
// sequentially with "same" zero padding (all taps odd).
struct SeparableKernel3d {
  Tensor width_w, width_b;
  Tensor time_w, time_b;
  Tensor plane_w, plane_b;
};

Tensor conv3d_separable(const Tensor& input, const SeparableKernel3d& k);

/// Block mean over the trailing two axes of [...,H,W]; H and W must be
/// divisible by factor.
Tensor avg_pool2d(const Tensor& input, int factor);

/// Bilinear interpolation on a rank-2 tensor at fractional (y,x); neighbors
/// outside the grid contribute zero, so fully-outside coordinates give 0.
float bilinear_at_zero(const Tensor& plane, float y, float x);

std::vector<float> bilinear_sample(const Tensor& plane,
                                   const std::vector<std::pair<float, float>>& coords);

/// Resizes the trailing two axes of [...,H,W] with bilinear interpolation on
/// the half-pixel-centered grid, clamping at the borders (a constant field
/// stays constant at any size).
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w);

/// Numerically stable softmax along one axis (max subtraction).
Tensor softmax(const Tensor& input, int axis);

/// Per-channel normalization of [C,H,W] over the spatial extent. The learned
/// gain is stored as an offset from one: out = norm(x) * (1 + gain) + bias.
Tensor instance_norm(const Tensor& input, const Tensor& gain, const Tensor& bias,
                     float eps = 1e-5f);

void relu_inplace(Tensor& t);
void sigmoid_inplace(Tensor& t);
void tanh_inplace(Tensor& t);

}  // namespace stereovid
