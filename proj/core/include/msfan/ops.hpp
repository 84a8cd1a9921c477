#pragma once

#include <vector>

#include "msfan/tensor.hpp"

namespace msfan {

/// 2D cross-correlation. `weight` is cout x cin x k x k, `bias` is 1 x cout x 1 x 1
/// (or undefined for no bias). Output extent is floor((h + 2p - k) / s) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1,
              int padding = 0);

/// Transposed convolution without padding. `weight` is cin x cout x k x k.
/// Output extent is (h - 1) * s + k.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride);

Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);

/// u (n x c x h x w) times s (n x c x 1 x 1), broadcast over the plane.
Tensor mul_channelwise(const Tensor& u, const Tensor& s);

/// Concatenates along the channel axis; all parts share n, h and w.
Tensor concat_channels(const std::vector<Tensor>& parts);

/// Mean over each h x w plane; returns n x c x 1 x 1.
Tensor global_avg_pool(const Tensor& input);

/// Sum of all elements as a 1 x 1 x 1 x 1 tensor.
Tensor sum(const Tensor& input);

/// Multiply-accumulate counts of the primitives, for the FLOP proxy.
int64_t conv2d_macs(const Shape& input, int64_t cout, int k, int stride, int padding);
int64_t conv_transpose2d_macs(const Shape& input, int64_t cout, int k);

}  // namespace msfan
