#pragma once

#include <array>
#include <string>

#include "msfan/metrics.hpp"
#include "msfan/model.hpp"
#include "msfan/tensor.hpp"

namespace msfan {

enum class LossBase { kSmoothL1, kSsim, kSmoothL1PlusSsim };

const char* loss_base_name(LossBase base);
LossBase parse_loss_base(const std::string& name);

/// Selects the training objective applied to each output head.
struct LossSpec {
  LossBase base = LossBase::kSmoothL1;
  bool log_scale = false;
  double epsilon = 1e-12;
  std::array<double, 3> head_weights{1.0, 1.0, 1.0};  // SR1, SR2, SR_out

  void validate() const;
};

/// Mean over all elements of 0.5 d^2 (|d| < 1) or |d| - 0.5, d = target - pred.
Tensor smooth_l1(const Tensor& pred, const Tensor& target);

/// 1 - mean SSIM over every n x c plane with a uniform window.
Tensor ssim_loss(const Tensor& pred, const Tensor& target, int window = kSsimWindow,
                 double data_range = 1.0);

/// log10(loss + epsilon) of a scalar loss.
Tensor log_wrap(const Tensor& loss, double epsilon);

/// Weighted sum over the heads present in `outputs`; with the Multi-FAN head
/// disabled only SR1 contributes, with weight 1.
Tensor total_loss(const LossSpec& spec, const ForwardOutputs& outputs, const Tensor& target);

}  // namespace msfan
