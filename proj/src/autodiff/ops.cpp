// Copyright 2026 The dvsmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dvsmc/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace dvsmc::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

// Keeps an input's storage alive for a backward rule; copies share the buffer.
struct Held {
  Tensor t;
  std::span<const double> d() const { return t.data(); }
};

std::string mismatch(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b);
}

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a, stride_b;
  enum class Kind { Same, ScalarA, ScalarB, General } kind = Kind::General;
};

std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t k = in.size(); k-- > 0;) {
    strides[k + offset] = in[k] == 1 ? 0 : stride;
    stride *= in[k];
  }
  return strides;
}

Broadcast plan(const char* op, const Shape& a, const Shape& b) {
  Broadcast p;
  const std::size_t rank = std::max(a.size(), b.size());
  p.out.assign(rank, 1);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k < rank - a.size() ? 1 : a[k - (rank - a.size())];
    const std::size_t db = k < rank - b.size() ? 1 : b[k - (rank - b.size())];
    if (da != db && da != 1 && db != 1) throw ShapeError(mismatch(op, a, b));
    p.out[k] = da == 1 ? db : da;
  }
  if (a == b) {
    p.kind = Broadcast::Kind::Same;
  } else if (numel(a) == 1 && numel(p.out) == numel(b)) {
    p.kind = Broadcast::Kind::ScalarA;
  } else if (numel(b) == 1 && numel(p.out) == numel(a)) {
    p.kind = Broadcast::Kind::ScalarB;
  } else {
    p.stride_a = broadcast_strides(a, p.out);
    p.stride_b = broadcast_strides(b, p.out);
  }
  return p;
}

// Calls f(i, ia, ib) for every output element i.
template <class F>
void for_each(const Broadcast& p, F&& f) {
  const std::size_t n = numel(p.out);
  switch (p.kind) {
    case Broadcast::Kind::Same:
      for (std::size_t i = 0; i < n; ++i) f(i, i, i);
      return;
    case Broadcast::Kind::ScalarA:
      for (std::size_t i = 0; i < n; ++i) f(i, std::size_t{0}, i);
      return;
    case Broadcast::Kind::ScalarB:
      for (std::size_t i = 0; i < n; ++i) f(i, i, std::size_t{0});
      return;
    case Broadcast::Kind::General:
      break;
  }
  const std::size_t rank = p.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < p.out[k]) {
        ia += p.stride_a[k];
        ib += p.stride_b[k];
        break;
      }
      ia -= p.stride_a[k] * (p.out[k] - 1);
      ib -= p.stride_b[k] * (p.out[k] - 1);
      idx[k] = 0;
    }
  }
}

// Elementwise binary op. `partials(x, y, z, &dx, &dy)` gives dz/dx, dz/dy.
template <class F, class P>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, P partials) {
  Broadcast p = plan(name, a.shape(), b.shape());
  std::vector<double> out(numel(p.out));
  const auto da = a.data();
  const auto db = b.data();
  for_each(p, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = f(da[ia], db[ib]); });
  Tensor result(p.out, std::move(out));
  Tape* tape = common_tape({&a, &b});
  if (!tape) return result;
  const int na = a.node(), nb = b.node();
  return tape->record(result, [p, ha = Held{a.detach()}, hb = Held{b.detach()},
                               hz = Held{result.detach()}, na, nb,
                               partials](std::span<const double> g, Tape& t) {
    const auto x = ha.d();
    const auto y = hb.d();
    const auto z = hz.d();
    std::span<double> ga, gb;
    if (na >= 0) ga = t.grad_buffer(na);
    if (nb >= 0) gb = t.grad_buffer(nb);
    for_each(p, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      double dx = 0.0, dy = 0.0;
      partials(x[ia], y[ib], z[i], dx, dy);
      if (na >= 0) ga[ia] += g[i] * dx;
      if (nb >= 0) gb[ib] += g[i] * dy;
    });
  });
}

// Elementwise unary op. `deriv(x, z)` gives dz/dx.
template <class F, class D>
Tensor unary(const Tensor& a, F f, D deriv) {
  const auto da = a.data();
  std::vector<double> out(da.size());
  for (std::size_t i = 0; i < da.size(); ++i) out[i] = f(da[i]);
  Tensor result(a.shape(), std::move(out));
  Tape* tape = a.tape();
  if (!a.attached()) return result;
  const int na = a.node();
  return tape->record(result, [ha = Held{a.detach()}, hz = Held{result.detach()}, na,
                               deriv](std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(na);
    const auto x = ha.d();
    const auto z = hz.d();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], z[i]);
  });
}

struct Axis {
  std::size_t outer = 1, n = 1, inner = 1;
};

Axis split(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + to_string(s));
  }
  Axis ax;
  for (std::size_t k = 0; k < axis; ++k) ax.outer *= s[k];
  ax.n = s[axis];
  for (std::size_t k = axis + 1; k < s.size(); ++k) ax.inner *= s[k];
  return ax;
}

Shape reduced(const Shape& s, std::size_t axis, bool keepdim) {
  Shape out = s;
  if (keepdim) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return out;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) { return plan("broadcast", a, b).out; }

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double, double& dx, double& dy) {
        dx = 1.0;
        dy = 1.0;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double, double& dx, double& dy) {
        dx = 1.0;
        dy = -1.0;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double, double& dx, double& dy) {
        dx = y;
        dy = x;
      });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double z, double& dx, double& dy) {
        dx = 1.0 / y;
        dy = -z / y;
      });
}

Tensor neg(const Tensor& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double z) { return z; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double z) { return 0.5 / z; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double z) { return 1.0 - z * z; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError(mismatch("matmul", a.shape(), b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<double> out(static_cast<std::size_t>(m * n));
  Map(out.data(), m, n).noalias() = MapC(a.data().data(), m, k) * MapC(b.data().data(), k, n);
  Tensor result({a.dim(0), b.dim(1)}, std::move(out));
  Tape* tape = common_tape({&a, &b});
  if (!tape) return result;
  const int na = a.node(), nb = b.node();
  return tape->record(result, [ha = Held{a.detach()}, hb = Held{b.detach()}, na, nb, m, k,
                               n](std::span<const double> g, Tape& t) {
    MapC G(g.data(), m, n);
    if (na >= 0) {
      Map(t.grad_buffer(na).data(), m, k).noalias() += G * MapC(hb.d().data(), k, n).transpose();
    }
    if (nb >= 0) {
      Map(t.grad_buffer(nb).data(), k, n).noalias() += MapC(ha.d().data(), m, k).transpose() * G;
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + to_string(a.shape()));
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto n = static_cast<Eigen::Index>(a.dim(1));
  std::vector<double> out(a.size());
  Map(out.data(), n, m) = MapC(a.data().data(), m, n).transpose();
  Tensor result({a.dim(1), a.dim(0)}, std::move(out));
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na, m, n](std::span<const double> g, Tape& t) {
    Map(t.grad_buffer(na).data(), m, n) += MapC(g.data(), n, m).transpose();
  });
}

namespace {

// Unfolds one image [C, H, W] into columns [C*kh*kw, H*W] with zero padding.
void im2col(const double* img, std::size_t c, std::size_t h, std::size_t w, std::size_t kh,
            std::size_t kw, double* cols) {
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj, ++row) {
        double* dst = cols + row * h * w;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - ph;
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x + kj) - pw;
            const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) &&
                                sx < static_cast<std::ptrdiff_t>(w);
            dst[y * w + x] = inside ? img[(ci * h + static_cast<std::size_t>(sy)) * w +
                                          static_cast<std::size_t>(sx)]
                                    : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t c, std::size_t h, std::size_t w, std::size_t kh,
                std::size_t kw, double* img) {
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj, ++row) {
        const double* src = cols + row * h * w;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - ph;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x + kj) - pw;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            img[(ci * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)] +=
                src[y * w + x];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight) {
  if (input.rank() != 4 || weight.rank() != 4 || input.dim(1) != weight.dim(1) ||
      weight.dim(2) % 2 == 0 || weight.dim(3) % 2 == 0) {
    throw ShapeError(mismatch("conv2d", input.shape(), weight.shape()));
  }
  const std::size_t batch = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t o = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const std::size_t rows = c * kh * kw, hw = h * w;
  std::vector<double> out(batch * o * hw);
  auto cols = std::make_shared<std::vector<double>>(batch * rows * hw);
  const auto in = input.data();
  MapC wmat(weight.data().data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(rows));
  for (std::size_t b = 0; b < batch; ++b) {
    double* col = cols->data() + b * rows * hw;
    im2col(in.data() + b * c * hw, c, h, w, kh, kw, col);
    Map(out.data() + b * o * hw, static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(hw))
        .noalias() = wmat * MapC(col, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
  }
  Tensor result({batch, o, h, w}, std::move(out));
  Tape* tape = common_tape({&input, &weight});
  if (!tape) return result;
  const int ni = input.node(), nw = weight.node();
  return tape->record(result, [cols, kernel = Held{weight.detach()}, ni, nw, batch, c, h, w, o, kh,
                               kw, rows, hw](std::span<const double> g, Tape& t) {
    const auto R = static_cast<Eigen::Index>(rows);
    const auto O = static_cast<Eigen::Index>(o);
    const auto P = static_cast<Eigen::Index>(hw);
    std::vector<double> dcol(rows * hw);
    for (std::size_t b = 0; b < batch; ++b) {
      MapC G(g.data() + b * o * hw, O, P);
      if (nw >= 0) {
        Map(t.grad_buffer(nw).data(), O, R).noalias() +=
            G * MapC(cols->data() + b * rows * hw, R, P).transpose();
      }
      if (ni >= 0) {
        Map(dcol.data(), R, P).noalias() = MapC(kernel.d().data(), O, R).transpose() * G;
        col2im_add(dcol.data(), c, h, w, kh, kw, t.grad_buffer(ni).data() + b * c * h * w);
      }
    }
  });
}

Tensor maxpool2x2(const Tensor& input) {
  if (input.rank() != 4) throw ShapeError("maxpool2x2: expected NCHW, got " + to_string(input.shape()));
  const std::size_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<double> out(planes * oh * ow);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const auto in = input.data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (p * h + 2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t j = (p * h + 2 * y + dy) * w + 2 * x + dx;
            if (in[j] > in[best]) best = j;
          }
        }
        const std::size_t i = (p * oh + y) * ow + x;
        out[i] = in[best];
        (*argmax)[i] = best;
      }
    }
  }
  Tensor result({input.dim(0), input.dim(1), oh, ow}, std::move(out));
  if (!input.attached()) return result;
  const int ni = input.node();
  return input.tape()->record(result, [argmax, ni](std::span<const double> g, Tape& t) {
    auto gi = t.grad_buffer(ni);
    for (std::size_t i = 0; i < g.size(); ++i) gi[(*argmax)[i]] += g[i];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tensor result = Tensor::scalar(s);
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na](std::span<const double> g, Tape& t) {
    for (double& v : t.grad_buffer(na)) v += g[0];
  });
}

Tensor sum(const Tensor& a, std::size_t axis, bool keepdim) {
  const Axis ax = split(a.shape(), axis, "sum");
  std::vector<double> out(ax.outer * ax.inner, 0.0);
  const auto d = a.data();
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t k = 0; k < ax.n; ++k) {
      const double* src = d.data() + (o * ax.n + k) * ax.inner;
      double* dst = out.data() + o * ax.inner;
      for (std::size_t i = 0; i < ax.inner; ++i) dst[i] += src[i];
    }
  }
  Tensor result(reduced(a.shape(), axis, keepdim), std::move(out));
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na, ax](std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(na);
    for (std::size_t o = 0; o < ax.outer; ++o) {
      for (std::size_t k = 0; k < ax.n; ++k) {
        for (std::size_t i = 0; i < ax.inner; ++i) {
          ga[(o * ax.n + k) * ax.inner + i] += g[o * ax.inner + i];
        }
      }
    }
  });
}

Tensor mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

Tensor mean(const Tensor& a, std::size_t axis, bool keepdim) {
  return sum(a, axis, keepdim) / static_cast<double>(a.dim(axis));
}

Tensor logsumexp(const Tensor& a, std::size_t axis, bool keepdim) {
  const Axis ax = split(a.shape(), axis, "logsumexp");
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> out(ax.outer * ax.inner);
  const auto d = a.data();
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t i = 0; i < ax.inner; ++i) {
      double m = ninf;
      for (std::size_t k = 0; k < ax.n; ++k) m = std::max(m, d[(o * ax.n + k) * ax.inner + i]);
      if (m == ninf || !std::isfinite(m)) {
        out[o * ax.inner + i] = m;
        continue;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < ax.n; ++k) s += std::exp(d[(o * ax.n + k) * ax.inner + i] - m);
      out[o * ax.inner + i] = m + std::log(s);
    }
  }
  Tensor result(reduced(a.shape(), axis, keepdim), std::move(out));
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na, ax, ha = Held{a.detach()}, hz = Held{result.detach()}](
                                      std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(na);
    const auto x = ha.d();
    const auto z = hz.d();
    for (std::size_t o = 0; o < ax.outer; ++o) {
      for (std::size_t i = 0; i < ax.inner; ++i) {
        const double lse = z[o * ax.inner + i];
        if (!std::isfinite(lse)) continue;
        const double go = g[o * ax.inner + i];
        for (std::size_t k = 0; k < ax.n; ++k) {
          const std::size_t j = (o * ax.n + k) * ax.inner + i;
          ga[j] += go * std::exp(x[j] - lse);
        }
      }
    }
  });
}

Tensor logsumexp(const Tensor& a) { return logsumexp(reshape(a, {a.size()}), 0); }

Tensor softmax(const Tensor& a, std::size_t axis) {
  const Axis ax = split(a.shape(), axis, "softmax");
  std::vector<double> out(a.size());
  const auto d = a.data();
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t i = 0; i < ax.inner; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < ax.n; ++k) m = std::max(m, d[(o * ax.n + k) * ax.inner + i]);
      double s = 0.0;
      for (std::size_t k = 0; k < ax.n; ++k) {
        const std::size_t j = (o * ax.n + k) * ax.inner + i;
        out[j] = std::exp(d[j] - m);
        s += out[j];
      }
      for (std::size_t k = 0; k < ax.n; ++k) out[(o * ax.n + k) * ax.inner + i] /= s;
    }
  }
  Tensor result(a.shape(), std::move(out));
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na, ax, hz = Held{result.detach()}](std::span<const double> g,
                                                                        Tape& t) {
    auto ga = t.grad_buffer(na);
    const auto y = hz.d();
    for (std::size_t o = 0; o < ax.outer; ++o) {
      for (std::size_t i = 0; i < ax.inner; ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < ax.n; ++k) {
          const std::size_t j = (o * ax.n + k) * ax.inner + i;
          dot += g[j] * y[j];
        }
        for (std::size_t k = 0; k < ax.n; ++k) {
          const std::size_t j = (o * ax.n + k) * ax.inner + i;
          ga[j] += y[j] * (g[j] - dot);
        }
      }
    }
  });
}

Tensor gather(const Tensor& a, std::size_t axis, std::span<const std::size_t> indices) {
  const Axis ax = split(a.shape(), axis, "gather");
  for (auto k : indices) {
    if (k >= ax.n) {
      throw ShapeError("gather: index " + std::to_string(k) + " out of range for shape " +
                       to_string(a.shape()));
    }
  }
  const std::size_t m = indices.size();
  std::vector<double> out(ax.outer * m * ax.inner);
  const auto d = a.data();
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(d.data() + (o * ax.n + indices[r]) * ax.inner, ax.inner,
                  out.data() + (o * m + r) * ax.inner);
    }
  }
  Shape shape = a.shape();
  shape[axis] = m;
  Tensor result(std::move(shape), std::move(out));
  if (!a.attached()) return result;
  const int na = a.node();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return a.tape()->record(result, [na, ax, idx = std::move(idx)](std::span<const double> g,
                                                                 Tape& t) {
    auto ga = t.grad_buffer(na);
    const std::size_t m = idx.size();
    for (std::size_t o = 0; o < ax.outer; ++o) {
      for (std::size_t r = 0; r < m; ++r) {
        double* dst = ga.data() + (o * ax.n + idx[r]) * ax.inner;
        const double* src = g.data() + (o * m + r) * ax.inner;
        for (std::size_t i = 0; i < ax.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + to_string(first));
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) throw ShapeError(mismatch("concat", first, s));
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k != axis && s[k] != first[k]) throw ShapeError(mismatch("concat", first, s));
    }
    widths.push_back(s[axis]);
    total += s[axis];
  }
  Shape shape = first;
  shape[axis] = total;
  const Axis ax = split(shape, axis, "concat");
  std::vector<double> out(numel(shape));
  std::size_t at = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto d = parts[p].data();
    const std::size_t block = widths[p] * ax.inner;
    for (std::size_t o = 0; o < ax.outer; ++o) {
      std::copy_n(d.data() + o * block, block, out.data() + o * total * ax.inner + at * ax.inner);
    }
    at += widths[p];
  }
  Tensor result(std::move(shape), std::move(out));
  Tape* tape = common_tape(parts);
  if (!tape) return result;
  std::vector<int> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return tape->record(result, [nodes, widths, ax, total](std::span<const double> g, Tape& t) {
    std::size_t at = 0;
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      const std::size_t block = widths[p] * ax.inner;
      if (nodes[p] >= 0) {
        auto gp = t.grad_buffer(nodes[p]);
        for (std::size_t o = 0; o < ax.outer; ++o) {
          const double* src = g.data() + o * total * ax.inner + at * ax.inner;
          for (std::size_t i = 0; i < block; ++i) gp[o * block + i] += src[i];
        }
      }
      at += widths[p];
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Axis ax = split(a.shape(), axis, "slice");
  if (begin > end || end > ax.n) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for shape " + to_string(a.shape()));
  }
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = begin + k;
  return gather(a, axis, idx);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError(mismatch("reshape", a.shape(), shape));
  }
  Tensor result(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  if (!a.attached()) return result;
  const int na = a.node();
  return a.tape()->record(result, [na](std::span<const double> g, Tape& t) { t.accumulate(na, g); });
}

}  // namespace dvsmc::ad
