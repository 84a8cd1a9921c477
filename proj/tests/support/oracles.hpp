#pragma once

// Reference implementations written independently of the library code paths.
// They are slow and direct on purpose.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "msfan/layers.hpp"
#include "msfan/mosaic.hpp"
#include "msfan/tensor.hpp"

namespace oracle {

using msfan::Shape;
using msfan::Tensor;

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (double& x : v) x = u(rng);
  return Tensor::from_data(s, std::move(v), requires_grad);
}

inline std::vector<double> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Direct-loop cross-correlation.
inline std::vector<double> conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                                  int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  const int64_t oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(xs.n * ws.n * oh * ow), 0.0);
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t co = 0; co < ws.n; ++co)
      for (int64_t y = 0; y < oh; ++y)
        for (int64_t xx = 0; xx < ow; ++xx) {
          double acc = b.defined() ? b.data()[static_cast<std::size_t>(co)] : 0.0;
          for (int64_t ci = 0; ci < xs.c; ++ci)
            for (int64_t ky = 0; ky < ws.h; ++ky)
              for (int64_t kx = 0; kx < ws.w; ++kx) {
                const int64_t iy = y * stride - pad + ky;
                const int64_t ix = xx * stride - pad + kx;
                if (iy < 0 || ix < 0 || iy >= xs.h || ix >= xs.w) continue;
                acc += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          out[static_cast<std::size_t>(((n * ws.n + co) * oh + y) * ow + xx)] = acc;
        }
  return out;
}

// Direct-loop transposed convolution: every input pixel scatters a scaled kernel.
inline std::vector<double> conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                                            int stride) {
  const Shape xs = x.shape(), ws = w.shape();
  const int64_t cout = ws.c, k = ws.h;
  const int64_t oh = (xs.h - 1) * stride + k;
  const int64_t ow = (xs.w - 1) * stride + k;
  std::vector<double> out(static_cast<std::size_t>(xs.n * cout * oh * ow), 0.0);
  auto at = [&](int64_t n, int64_t c, int64_t y, int64_t xx) -> double& {
    return out[static_cast<std::size_t>(((n * cout + c) * oh + y) * ow + xx)];
  };
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t ci = 0; ci < xs.c; ++ci)
      for (int64_t y = 0; y < xs.h; ++y)
        for (int64_t xx = 0; xx < xs.w; ++xx)
          for (int64_t co = 0; co < cout; ++co)
            for (int64_t ky = 0; ky < k; ++ky)
              for (int64_t kx = 0; kx < k; ++kx)
                at(n, co, y * stride + ky, xx * stride + kx) += x.at(n, ci, y, xx) * w.at(ci, co, ky, kx);
  if (b.defined()) {
    for (int64_t n = 0; n < xs.n; ++n)
      for (int64_t co = 0; co < cout; ++co)
        for (int64_t y = 0; y < oh; ++y)
          for (int64_t xx = 0; xx < ow; ++xx) at(n, co, y, xx) += b.data()[static_cast<std::size_t>(co)];
  }
  return out;
}

// Mean SSIM by recomputing every window's statistics from its own pixels.
inline double ssim_plane(const double* x, const double* y, int h, int w, int win = 7,
                         double range = 1.0) {
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  const double n = static_cast<double>(win * win);
  double total = 0.0;
  int count = 0;
  for (int i = 0; i + win <= h; ++i) {
    for (int j = 0; j + win <= w; ++j) {
      double mx = 0, my = 0;
      for (int a = 0; a < win; ++a)
        for (int b = 0; b < win; ++b) {
          mx += x[(i + a) * w + j + b];
          my += y[(i + a) * w + j + b];
        }
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cxy = 0;
      for (int a = 0; a < win; ++a)
        for (int b = 0; b < win; ++b) {
          const double dx = x[(i + a) * w + j + b] - mx;
          const double dy = y[(i + a) * w + j + b] - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= n;
      vy /= n;
      cxy /= n;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Entries whose difference quotients disagree with each other across step
  // sizes: a ReLU switches within the step, so no derivative exists there.
  std::size_t nonsmooth = 0;
  std::string worst;
};

// Central differences of `loss` with respect to every element of every tensor
// in `targets`, compared against the gradients already stored in them. Each
// entry is compared at step h first, then at 10h and h / 10; it passes if any
// quotient agrees with the analytic value within `tol`.
inline GradCheck finite_difference_check(std::vector<std::pair<std::string, Tensor>>& targets,
                                         const std::function<double()>& loss, double h = 1e-6,
                                         double floor = 1e-6, double tol = 1e-4) {
  GradCheck r;
  for (auto& [name, t] : targets) {
    const std::vector<double> analytic = t.has_grad()
                                             ? std::vector<double>(t.grad().begin(), t.grad().end())
                                             : std::vector<double>(static_cast<std::size_t>(t.numel()), 0.0);
    auto data = t.mutable_data();
    auto quotient = [&](std::size_t i, double step) {
      const double keep = data[i];
      data[i] = keep + step;
      const double up = loss();
      data[i] = keep - step;
      const double down = loss();
      data[i] = keep;
      return (up - down) / (2.0 * step);
    };
    for (std::size_t i = 0; i < data.size(); ++i) {
      ++r.checked;
      const double mid = quotient(i, h);
      double e = relative_error(analytic[i], mid, floor);
      double numeric = mid;
      if (e > tol) {
        const double coarse = quotient(i, 10.0 * h);
        const double fine = quotient(i, h / 10.0);
        const double e_coarse = relative_error(analytic[i], coarse, floor);
        const double e_fine = relative_error(analytic[i], fine, floor);
        if (std::min(e_coarse, e_fine) <= tol) {
          e = std::min(e_coarse, e_fine);
          numeric = e_coarse <= e_fine ? coarse : fine;
        } else if (relative_error(coarse, mid, floor) > tol || relative_error(mid, fine, floor) > tol) {
          ++r.nonsmooth;
          continue;
        }
      }
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic[i]) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

inline msfan::SpectralCube random_cube(int c, int h, int w, std::mt19937_64& rng) {
  msfan::SpectralCube cube(c, h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : cube.data) v = u(rng);
  return cube;
}

}  // namespace oracle
