#pragma once

#include <vector>

namespace msfan::detail {

// Sums over every valid win x win window of a h x w plane. Output is
// (h - win + 1) x (w - win + 1), computed separably with direct sums.
inline std::vector<double> window_sums(const std::vector<double>& v, int h, int w, int win) {
  const int oh = h - win + 1;
  const int ow = w - win + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    const double* src = v.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < win; ++k) acc += src[x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < win; ++k) acc += rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

// Adjoint of window_sums: every pixel receives the sum of the values of the
// windows that contain it.
inline std::vector<double> window_scatter(const std::vector<double>& m, int h, int w, int win) {
  const int oh = h - win + 1;
  const int ow = w - win + 1;
  std::vector<double> cols(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    const int y0 = y - win + 1 < 0 ? 0 : y - win + 1;
    const int y1 = y < oh - 1 ? y : oh - 1;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = y0; k <= y1; ++k) acc += m[static_cast<std::size_t>(k) * ow + x];
      cols[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = x - win + 1 < 0 ? 0 : x - win + 1;
      const int x1 = x < ow - 1 ? x : ow - 1;
      double acc = 0.0;
      for (int k = x0; k <= x1; ++k) acc += cols[static_cast<std::size_t>(y) * ow + k];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

struct SsimResult {
  double mean = 0.0;
  // d(mean)/dx and d(mean)/dy, filled only when requested.
  std::vector<double> grad_x;
  std::vector<double> grad_y;
};

// Mean SSIM of two h x w planes over a uniform window.
inline SsimResult ssim_plane_impl(const double* xp, const double* yp, int h, int w, int win,
                                  double range, bool with_grad) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> x(xp, xp + n), y(yp, yp + n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto sx = window_sums(x, h, w, win);
  const auto sy = window_sums(y, h, w, win);
  const auto sxx = window_sums(xx, h, w, win);
  const auto syy = window_sums(yy, h, w, win);
  const auto sxy = window_sums(xy, h, w, win);

  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const double count = static_cast<double>(win) * win;
  const std::size_t m = sx.size();

  SsimResult result;
  std::vector<double> ax, bx, cx, ay, by, cy;
  if (with_grad) {
    ax.resize(m), bx.resize(m), cx.resize(m), ay.resize(m), by.resize(m), cy.resize(m);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double mx = sx[i] / count;
    const double my = sy[i] / count;
    const double vx = sxx[i] / count - mx * mx;
    const double vy = syy[i] / count - my * my;
    const double cxy = sxy[i] / count - mx * my;
    const double a1 = 2.0 * mx * my + c1;
    const double a2 = 2.0 * cxy + c2;
    const double b1 = mx * mx + my * my + c1;
    const double b2 = vx + vy + c2;
    const double s = (a1 * a2) / (b1 * b2);
    total += s;
    if (with_grad) {
      const double ds_dvar_x = -s / b2;
      const double ds_dcov = 2.0 * s / a2;
      const double ds_dmx = s * (2.0 * my / a1 - 2.0 * mx / b1);
      const double ds_dmy = s * (2.0 * mx / a1 - 2.0 * my / b1);
      // dS/dx_p = a + b x_p + c y_p for every p in the window.
      bx[i] = 2.0 * ds_dvar_x / count;
      cx[i] = ds_dcov / count;
      ax[i] = (ds_dmx - 2.0 * ds_dvar_x * mx - ds_dcov * my) / count;
      by[i] = 2.0 * ds_dvar_x / count;  // dS/dvar_y has the same form
      cy[i] = ds_dcov / count;
      ay[i] = (ds_dmy - 2.0 * ds_dvar_x * my - ds_dcov * mx) / count;
    }
  }
  result.mean = total / static_cast<double>(m);
  if (with_grad) {
    const double inv = 1.0 / static_cast<double>(m);
    const auto sax = window_scatter(ax, h, w, win);
    const auto sbx = window_scatter(bx, h, w, win);
    const auto scx = window_scatter(cx, h, w, win);
    const auto say = window_scatter(ay, h, w, win);
    const auto sby = window_scatter(by, h, w, win);
    const auto scy = window_scatter(cy, h, w, win);
    result.grad_x.resize(n);
    result.grad_y.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      result.grad_x[p] = (sax[p] + sbx[p] * x[p] + scx[p] * y[p]) * inv;
      result.grad_y[p] = (say[p] + sby[p] * y[p] + scy[p] * x[p]) * inv;
    }
  }
  return result;
}

}  // namespace msfan::detail
