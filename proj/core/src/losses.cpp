#include "msfan/losses.hpp"

#include <cmath>
#include <numbers>

#include "msfan/errors.hpp"
#include "msfan/ops.hpp"
#include "ssim_kernel.hpp"

namespace msfan {

const char* loss_base_name(LossBase base) {
  switch (base) {
    case LossBase::kSmoothL1: return "smooth_l1";
    case LossBase::kSsim: return "ssim";
    case LossBase::kSmoothL1PlusSsim: return "smooth_l1_plus_ssim";
  }
  return "smooth_l1";
}

LossBase parse_loss_base(const std::string& name) {
  if (name == "smooth_l1") return LossBase::kSmoothL1;
  if (name == "ssim") return LossBase::kSsim;
  if (name == "smooth_l1_plus_ssim") return LossBase::kSmoothL1PlusSsim;
  throw ConfigError("unknown loss base '" + name + "'");
}

void LossSpec::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("loss.epsilon must be > 0");
  bool any = false;
  for (double w : head_weights) {
    if (!(w >= 0.0)) throw ConfigError("loss.head_weights must be >= 0");
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("loss.head_weights must not all be zero");
}

Tensor smooth_l1(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("smooth_l1: shape mismatch " + pred.shape().str() + " vs " +
                         target.shape().str());
  }
  auto p = pred.data();
  auto t = target.data();
  const double count = static_cast<double>(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = t[i] - p[i];
    const double a = std::abs(d);
    acc += a < 1.0 ? 0.5 * d * d : a - 0.5;
  }
  Tensor out = Tensor::scalar(acc / count);
  if (should_record({&pred, &target})) {
    active_tape()->record({pred, target}, out, [pred, target, out, count]() mutable {
      const double g = out.grad()[0] / count;
      auto p = pred.data();
      auto t = target.data();
      std::span<double> dp = pred.requires_grad() ? pred.grad_buffer() : std::span<double>{};
      std::span<double> dt = target.requires_grad() ? target.grad_buffer() : std::span<double>{};
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = t[i] - p[i];
        // derivative w.r.t. d; continuous at |d| = 1
        const double dd = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
        if (!dp.empty()) dp[i] -= g * dd;
        if (!dt.empty()) dt[i] += g * dd;
      }
    });
  }
  return out;
}

Tensor ssim_loss(const Tensor& pred, const Tensor& target, int window, double data_range) {
  const Shape s = pred.shape();
  if (s != target.shape()) {
    throw DimensionError("ssim_loss: shape mismatch " + s.str() + " vs " + target.shape().str());
  }
  if (s.h < window || s.w < window) {
    throw DimensionError("ssim_loss: plane " + s.str() + " smaller than window");
  }
  const int64_t planes = s.n * s.c;
  const bool track = should_record({&pred, &target});
  std::vector<double> gp, gt;
  if (track) {
    gp.resize(static_cast<std::size_t>(s.numel()));
    gt.resize(static_cast<std::size_t>(s.numel()));
  }
  double total = 0.0;
  for (int64_t k = 0; k < planes; ++k) {
    const auto r = detail::ssim_plane_impl(pred.data().data() + k * s.plane(),
                                           target.data().data() + k * s.plane(),
                                           static_cast<int>(s.h), static_cast<int>(s.w), window,
                                           data_range, track);
    total += r.mean;
    if (track) {
      std::copy(r.grad_x.begin(), r.grad_x.end(), gp.begin() + k * s.plane());
      std::copy(r.grad_y.begin(), r.grad_y.end(), gt.begin() + k * s.plane());
    }
  }
  Tensor out = Tensor::scalar(1.0 - total / static_cast<double>(planes));
  if (track) {
    active_tape()->record({pred, target}, out,
                          [pred, target, out, planes, gp = std::move(gp), gt = std::move(gt)]() mutable {
                            // d(1 - mean_k S_k) = -(1/planes) dS_k
                            const double g = -out.grad()[0] / static_cast<double>(planes);
                            if (pred.requires_grad()) {
                              auto d = pred.grad_buffer();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += g * gp[i];
                            }
                            if (target.requires_grad()) {
                              auto d = target.grad_buffer();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += g * gt[i];
                            }
                          });
  }
  return out;
}

Tensor log_wrap(const Tensor& loss, double epsilon) {
  const double value = loss.item();
  if (value < 0.0) throw ContractError("log_wrap: loss must be non-negative");
  Tensor out = Tensor::scalar(std::log10(value + epsilon));
  if (should_record({&loss})) {
    active_tape()->record({loss}, out, [loss, out, value, epsilon]() mutable {
      loss.grad_buffer()[0] += out.grad()[0] / ((value + epsilon) * std::numbers::ln10);
    });
  }
  return out;
}

namespace {

Tensor head_loss(const LossSpec& spec, const Tensor& pred, const Tensor& target) {
  auto wrap = [&](const Tensor& l) { return spec.log_scale ? log_wrap(l, spec.epsilon) : l; };
  switch (spec.base) {
    case LossBase::kSmoothL1: return wrap(smooth_l1(pred, target));
    case LossBase::kSsim: return wrap(ssim_loss(pred, target));
    case LossBase::kSmoothL1PlusSsim:
      return add(wrap(smooth_l1(pred, target)), wrap(ssim_loss(pred, target)));
  }
  return wrap(smooth_l1(pred, target));
}

}  // namespace

Tensor total_loss(const LossSpec& spec, const ForwardOutputs& outputs, const Tensor& target) {
  spec.validate();
  if (!outputs.sr2 || !outputs.sr_out) return head_loss(spec, outputs.sr1, target);

  const Tensor* heads[3] = {&outputs.sr1, &*outputs.sr2, &*outputs.sr_out};
  Tensor total;
  for (int h = 0; h < 3; ++h) {
    const double weight = spec.head_weights[static_cast<std::size_t>(h)];
    if (weight == 0.0) continue;
    Tensor term = head_loss(spec, *heads[h], target);
    if (weight != 1.0) term = scale(term, weight);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

}  // namespace msfan
