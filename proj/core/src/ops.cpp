#include "msfan/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "msfan/errors.hpp"

namespace msfan {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Unfolds one c x h x w image into a (c*k*k) x (oh*ow) patch matrix.
void im2col(const double* x, int64_t c, int64_t h, int64_t w, int k, int stride, int pad,
            int64_t oh, int64_t ow, double* cols) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + ((ci * k + ky) * k + kx) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          double* dst = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = x + (ci * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch columns back, accumulating into x.
void col2im(const double* cols, int64_t c, int64_t h, int64_t w, int k, int stride, int pad,
            int64_t oh, int64_t ow, double* x) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + ((ci * k + ky) * k + kx) * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + oy * ow;
          double* dst = x + (ci * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_bias(const Tensor& bias, int64_t cout, const char* op) {
  if (bias.defined() && bias.numel() != cout) {
    throw DimensionError(std::string(op) + ": bias has " + std::to_string(bias.numel()) +
                         " elements, expected " + std::to_string(cout));
  }
}

void add_bias(std::span<double> out, const Tensor& bias, const Shape& s) {
  if (!bias.defined()) return;
  auto b = bias.data();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      double* p = out.data() + (n * s.c + c) * s.plane();
      for (int64_t i = 0; i < s.plane(); ++i) p[i] += b[static_cast<std::size_t>(c)];
    }
  }
}

void accumulate_bias_grad(Tensor bias, std::span<const double> gout, const Shape& s) {
  auto db = bias.grad_buffer();
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const double* p = gout.data() + (n * s.c + c) * s.plane();
      double acc = 0.0;
      for (int64_t i = 0; i < s.plane(); ++i) acc += p[i];
      db[static_cast<std::size_t>(c)] += acc;
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding) {
  const Shape in = input.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w || ws.h < 1) {
    throw DimensionError("conv2d: kernel must be square and non-empty, got " + ws.str());
  }
  if (ws.c != in.c) {
    throw DimensionError("conv2d: input has " + std::to_string(in.c) +
                         " channels but weight expects " + std::to_string(ws.c));
  }
  const int k = static_cast<int>(ws.h);
  if (stride < 1 || padding < 0 || in.h + 2 * padding < k || in.w + 2 * padding < k) {
    throw DimensionError("conv2d: invalid stride/padding for input " + in.str());
  }
  check_bias(bias, ws.n, "conv2d");

  const int64_t oh = (in.h + 2 * padding - k) / stride + 1;
  const int64_t ow = (in.w + 2 * padding - k) / stride + 1;
  const Shape os{in.n, ws.n, oh, ow};
  const int64_t kdim = in.c * k * k;
  const int64_t p = oh * ow;

  Tensor out = Tensor::zeros(os);
  RowMat cols(kdim, p);
  ConstMapMat wm(weight.data().data(), ws.n, kdim);
  for (int64_t n = 0; n < in.n; ++n) {
    im2col(input.data().data() + n * in.c * in.plane(), in.c, in.h, in.w, k, stride, padding,
           oh, ow, cols.data());
    MapMat(out.mutable_data().data() + n * os.c * p, os.c, p).noalias() = wm * cols;
  }
  add_bias(out.mutable_data(), bias, os);

  if (should_record({&input, &weight, &bias})) {
    active_tape()->record(
        {input, weight, bias}, out, [input, weight, bias, out, stride, padding, k, oh, ow]() mutable {
          const Shape in = input.shape();
          const Shape os = out.shape();
          const int64_t kdim = in.c * k * k;
          const int64_t p = oh * ow;
          auto gout = out.grad();
          ConstMapMat wm(weight.data().data(), os.c, kdim);
          RowMat cols(kdim, p);
          RowMat dcols;
          for (int64_t n = 0; n < in.n; ++n) {
            ConstMapMat g(gout.data() + n * os.c * p, os.c, p);
            if (weight.requires_grad()) {
              im2col(input.data().data() + n * in.c * in.plane(), in.c, in.h, in.w, k, stride,
                     padding, oh, ow, cols.data());
              MapMat(weight.grad_buffer().data(), os.c, kdim).noalias() += g * cols.transpose();
            }
            if (input.requires_grad()) {
              dcols.noalias() = wm.transpose() * g;
              col2im(dcols.data(), in.c, in.h, in.w, k, stride, padding, oh, ow,
                     input.grad_buffer().data() + n * in.c * in.plane());
            }
          }
          if (bias.requires_grad()) accumulate_bias_grad(bias, gout, os);
        });
  }
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride) {
  const Shape in = input.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w || ws.h < 1) {
    throw DimensionError("conv_transpose2d: kernel must be square, got " + ws.str());
  }
  if (ws.n != in.c) {
    throw DimensionError("conv_transpose2d: input has " + std::to_string(in.c) +
                         " channels but weight expects " + std::to_string(ws.n));
  }
  if (stride < 1) throw DimensionError("conv_transpose2d: stride must be >= 1");
  const int k = static_cast<int>(ws.h);
  const int64_t cout = ws.c;
  check_bias(bias, cout, "conv_transpose2d");

  const int64_t oh = (in.h - 1) * stride + k;
  const int64_t ow = (in.w - 1) * stride + k;
  const Shape os{in.n, cout, oh, ow};
  const int64_t kdim = cout * k * k;
  const int64_t p = in.plane();

  Tensor out = Tensor::zeros(os);
  ConstMapMat wm(weight.data().data(), in.c, kdim);
  RowMat cols(kdim, p);
  for (int64_t n = 0; n < in.n; ++n) {
    ConstMapMat x(input.data().data() + n * in.c * p, in.c, p);
    cols.noalias() = wm.transpose() * x;
    col2im(cols.data(), cout, oh, ow, k, stride, 0, in.h, in.w,
           out.mutable_data().data() + n * cout * os.plane());
  }
  add_bias(out.mutable_data(), bias, os);

  if (should_record({&input, &weight, &bias})) {
    active_tape()->record({input, weight, bias}, out, [input, weight, bias, out, stride, k]() mutable {
      const Shape in = input.shape();
      const Shape os = out.shape();
      const int64_t kdim = os.c * k * k;
      const int64_t p = in.plane();
      auto gout = out.grad();
      ConstMapMat wm(weight.data().data(), in.c, kdim);
      RowMat dcols(kdim, p);
      for (int64_t n = 0; n < in.n; ++n) {
        im2col(gout.data() + n * os.c * os.plane(), os.c, os.h, os.w, k, stride, 0, in.h, in.w,
               dcols.data());
        if (input.requires_grad()) {
          MapMat(input.grad_buffer().data() + n * in.c * p, in.c, p).noalias() += wm * dcols;
        }
        if (weight.requires_grad()) {
          ConstMapMat x(input.data().data() + n * in.c * p, in.c, p);
          MapMat(weight.grad_buffer().data(), in.c, kdim).noalias() += x * dcols.transpose();
        }
      }
      if (bias.requires_grad()) accumulate_bias_grad(bias, gout, os);
    });
  }
  return out;
}

Tensor relu(const Tensor& input) {
  auto x = input.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  Tensor out = Tensor::from_data(input.shape(), std::move(y));
  if (should_record({&input})) {
    active_tape()->record({input}, out, [input, out]() mutable {
      auto x = input.data();
      auto g = out.grad();
      auto dx = input.grad_buffer();
      // Subgradient at exactly zero is taken as zero.
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) dx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& input) {
  auto x = input.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    } else {
      const double e = std::exp(x[i]);
      y[i] = e / (1.0 + e);
    }
  }
  Tensor out = Tensor::from_data(input.shape(), std::move(y));
  if (should_record({&input})) {
    active_tape()->record({input}, out, [input, out]() mutable {
      auto y = out.data();
      auto g = out.grad();
      auto dx = input.grad_buffer();
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  Tensor out = Tensor::from_data(a.shape(), std::move(z));
  if (should_record({&a, &b})) {
    active_tape()->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto da = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        auto db = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& input, double factor) {
  auto x = input.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * factor;
  Tensor out = Tensor::from_data(input.shape(), std::move(y));
  if (should_record({&input})) {
    active_tape()->record({input}, out, [input, out, factor]() mutable {
      auto g = out.grad();
      auto dx = input.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor mul_channelwise(const Tensor& u, const Tensor& s) {
  const Shape us = u.shape();
  const Shape ss = s.shape();
  if (ss.n != us.n || ss.c != us.c || ss.h != 1 || ss.w != 1) {
    throw DimensionError("mul_channelwise: scale shape " + ss.str() + " incompatible with " +
                         us.str());
  }
  const int64_t plane = us.plane();
  auto x = u.data();
  auto sc = s.data();
  std::vector<double> y(x.size());
  for (int64_t nc = 0; nc < us.n * us.c; ++nc) {
    const double f = sc[static_cast<std::size_t>(nc)];
    for (int64_t i = 0; i < plane; ++i) y[nc * plane + i] = x[nc * plane + i] * f;
  }
  Tensor out = Tensor::from_data(us, std::move(y));
  if (should_record({&u, &s})) {
    active_tape()->record({u, s}, out, [u, s, out]() mutable {
      const Shape us = u.shape();
      const int64_t plane = us.plane();
      auto g = out.grad();
      auto x = u.data();
      auto sc = s.data();
      for (int64_t nc = 0; nc < us.n * us.c; ++nc) {
        if (u.requires_grad()) {
          auto du = u.grad_buffer();
          const double f = sc[static_cast<std::size_t>(nc)];
          for (int64_t i = 0; i < plane; ++i) du[nc * plane + i] += g[nc * plane + i] * f;
        }
        if (s.requires_grad()) {
          double acc = 0.0;
          for (int64_t i = 0; i < plane; ++i) acc += g[nc * plane + i] * x[nc * plane + i];
          s.grad_buffer()[static_cast<std::size_t>(nc)] += acc;
        }
      }
    });
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: empty list");
  const Shape first = parts.front().shape();
  int64_t channels = 0;
  for (const Tensor& t : parts) {
    const Shape s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw DimensionError("concat_channels: " + s.str() + " does not match " + first.str());
    }
    channels += s.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const int64_t plane = first.plane();
  Tensor out = Tensor::zeros(os);
  auto y = out.mutable_data();
  for (int64_t n = 0; n < os.n; ++n) {
    int64_t offset = 0;
    for (const Tensor& t : parts) {
      const int64_t block = t.shape().c * plane;
      auto src = t.data().subspan(static_cast<std::size_t>(n * block), static_cast<std::size_t>(block));
      std::copy(src.begin(), src.end(), y.begin() + (n * channels * plane + offset));
      offset += block;
    }
  }
  if (should_record(parts)) {
    active_tape()->record(parts, out, [parts, out]() mutable {
      const Shape os = out.shape();
      const int64_t plane = os.plane();
      auto g = out.grad();
      for (int64_t n = 0; n < os.n; ++n) {
        int64_t offset = 0;
        for (Tensor t : parts) {
          const int64_t block = t.shape().c * plane;
          if (t.requires_grad()) {
            auto dt = t.grad_buffer();
            for (int64_t i = 0; i < block; ++i) {
              dt[n * block + i] += g[n * os.c * plane + offset + i];
            }
          }
          offset += block;
        }
      }
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape s = input.shape();
  const int64_t plane = s.plane();
  if (plane == 0) throw DimensionError("global_avg_pool: empty plane");
  auto x = input.data();
  std::vector<double> y(static_cast<std::size_t>(s.n * s.c));
  for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += x[nc * plane + i];
    y[static_cast<std::size_t>(nc)] = acc / static_cast<double>(plane);
  }
  Tensor out = Tensor::from_data({s.n, s.c, 1, 1}, std::move(y));
  if (should_record({&input})) {
    active_tape()->record({input}, out, [input, out]() mutable {
      const Shape s = input.shape();
      const int64_t plane = s.plane();
      auto g = out.grad();
      auto dx = input.grad_buffer();
      for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
        const double v = g[static_cast<std::size_t>(nc)] / static_cast<double>(plane);
        for (int64_t i = 0; i < plane; ++i) dx[nc * plane + i] += v;
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& input) {
  double acc = 0.0;
  for (double v : input.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  if (should_record({&input})) {
    active_tape()->record({input}, out, [input, out]() mutable {
      const double g = out.grad()[0];
      for (double& d : input.grad_buffer()) d += g;
    });
  }
  return out;
}

int64_t conv2d_macs(const Shape& input, int64_t cout, int k, int stride, int padding) {
  const int64_t oh = (input.h + 2 * padding - k) / stride + 1;
  const int64_t ow = (input.w + 2 * padding - k) / stride + 1;
  return input.n * oh * ow * cout * input.c * k * k;
}

int64_t conv_transpose2d_macs(const Shape& input, int64_t cout, int k) {
  return input.n * input.h * input.w * input.c * cout * k * k;
}

}  // namespace msfan
