#include "dpg/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpg/tensor/errors.hpp"
#include "dpg/tensor/parallel.hpp"

namespace dpg::ops {

namespace {

template <typename T>
bool tracking(Tape<T>* tape, std::initializer_list<const Tensor<T>*> xs) {
  if (!tape) return false;
  for (const auto* x : xs)
    if (x->defined() && x->requires_grad()) return true;
  return false;
}

template <typename T>
Tensor<T> make_output(Shape shape, std::vector<T> data, bool track) {
  Tensor<T> out(std::move(shape), std::move(data));
  if (track) out.set_requires_grad(true);
  return out;
}

// Gradient buffer of a tracked tensor, or an empty span when it is untracked.
template <typename T>
std::span<T> grad_of(const Tensor<T>& t) {
  auto& st = t.storage();
  if (!st.requires_grad) return {};
  return st.grad;
}

void require_rank(const char* op, const char* arg, const Shape& s,
                  std::size_t rank) {
  if (s.size() != rank)
    throw ShapeError(std::string(op) + ": " + arg + " must be rank " +
                     std::to_string(rank) + ", got " + shape_to_string(s));
}

[[noreturn]] void dim_mismatch(const char* op, const std::string& what,
                               std::size_t got, std::size_t want) {
  throw ShapeError(std::string(op) + ": " + what + " is " +
                   std::to_string(got) + ", expected " + std::to_string(want));
}

// Unfolds one image [C,H,W] into columns [C*kh*kw, Ho*Wo].
template <typename T>
void im2col(const T* x, std::size_t C, std::size_t H, std::size_t W,
            std::size_t kh, std::size_t kw, std::size_t Ho, std::size_t Wo,
            const Conv2dOptions& opt, T* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(opt.padding);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ki = 0; ki < kh; ++ki)
      for (std::size_t kj = 0; kj < kw; ++kj) {
        T* row = cols + ((c * kh + ki) * kw + kj) * Ho * Wo;
        for (std::size_t oh = 0; oh < Ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * opt.stride + ki * opt.dilation) - pad;
          for (std::size_t ow = 0; ow < Wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * opt.stride + kj * opt.dilation) - pad;
            const bool inside = ih >= 0 && iw >= 0 &&
                                ih < static_cast<std::ptrdiff_t>(H) &&
                                iw < static_cast<std::ptrdiff_t>(W);
            row[oh * Wo + ow] = inside ? x[(c * H + ih) * W + iw] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* cols, std::size_t C, std::size_t H, std::size_t W,
                std::size_t kh, std::size_t kw, std::size_t Ho, std::size_t Wo,
                const Conv2dOptions& opt, T* gx) {
  const auto pad = static_cast<std::ptrdiff_t>(opt.padding);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ki = 0; ki < kh; ++ki)
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const T* row = cols + ((c * kh + ki) * kw + kj) * Ho * Wo;
        for (std::size_t oh = 0; oh < Ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * opt.stride + ki * opt.dilation) - pad;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t ow = 0; ow < Wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * opt.stride + kj * opt.dilation) - pad;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            gx[(c * H + ih) * W + iw] += row[oh * Wo + ow];
          }
        }
      }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& b, Conv2dOptions opt) {
  require_rank("conv2d", "input", x.shape(), 4);
  require_rank("conv2d", "weight", w.shape(), 4);
  require_rank("conv2d", "bias", b.shape(), 1);
  if (opt.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (opt.dilation < 1) throw std::invalid_argument("conv2d: dilation must be >= 1");
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != C)
    dim_mismatch("conv2d", "input channel count (dim 1)", C, w.dim(1));
  if (b.dim(0) != Co) dim_mismatch("conv2d", "bias length (dim 0)", b.dim(0), Co);
  const auto span_h = opt.dilation * (kh - 1) + 1;
  const auto span_w = opt.dilation * (kw - 1) + 1;
  if (H + 2 * opt.padding < span_h)
    throw ShapeError("conv2d: height (dim 2) " + std::to_string(H) +
                     " too small for dilated kernel extent " + std::to_string(span_h));
  if (W + 2 * opt.padding < span_w)
    throw ShapeError("conv2d: width (dim 3) " + std::to_string(W) +
                     " too small for dilated kernel extent " + std::to_string(span_w));
  const auto Ho = (H + 2 * opt.padding - span_h) / opt.stride + 1;
  const auto Wo = (W + 2 * opt.padding - span_w) / opt.stride + 1;
  const auto K = C * kh * kw;
  const auto P = Ho * Wo;
  const bool pointwise = kh == 1 && kw == 1 && opt.stride == 1 && opt.padding == 0;

  auto xd = x.data();
  auto wd = w.data();
  auto bd = b.data();
  std::vector<T> out(N * Co * P);
  std::vector<T> cols(pointwise ? 0 : K * P);
  for (std::size_t n = 0; n < N; ++n) {
    const T* xn = xd.data() + n * C * H * W;
    const T* cn = xn;
    if (!pointwise) {
      im2col(xn, C, H, W, kh, kw, Ho, Wo, opt, cols.data());
      cn = cols.data();
    }
    T* on = out.data() + n * Co * P;
    parallel_for(Co, [&](std::size_t co) {
      T* o = on + co * P;
      std::fill(o, o + P, bd[co]);
      const T* wr = wd.data() + co * K;
      for (std::size_t k = 0; k < K; ++k) {
        const T wv = wr[k];
        const T* c = cn + k * P;
        for (std::size_t p = 0; p < P; ++p) o[p] += wv * c[p];
      }
    });
  }

  const bool track = tracking(tape, {&x, &w, &b});
  auto y = make_output<T>({N, Co, Ho, Wo}, std::move(out), track);
  if (track) {
    tape->record("conv2d", {x, w, b}, y, [=]() {
      auto dy = y.grad();
      auto gx = grad_of(x), gw = grad_of(w), gb = grad_of(b);
      auto xd = x.data();
      auto wd = w.data();
      std::vector<T> cols(pointwise ? 0 : K * P);
      std::vector<T> dcols(gx.empty() ? 0 : K * P);
      for (std::size_t n = 0; n < N; ++n) {
        const T* dyn = dy.data() + n * Co * P;
        if (!gb.empty())
          for (std::size_t co = 0; co < Co; ++co) {
            T s = 0;
            for (std::size_t p = 0; p < P; ++p) s += dyn[co * P + p];
            gb[co] += s;
          }
        if (!gw.empty()) {
          const T* xn = xd.data() + n * C * H * W;
          const T* cn = xn;
          if (!pointwise) {
            im2col(xn, C, H, W, kh, kw, Ho, Wo, opt, cols.data());
            cn = cols.data();
          }
          parallel_for(Co, [&](std::size_t co) {
            const T* d = dyn + co * P;
            T* g = gw.data() + co * K;
            for (std::size_t k = 0; k < K; ++k) {
              const T* c = cn + k * P;
              T s = 0;
              for (std::size_t p = 0; p < P; ++p) s += d[p] * c[p];
              g[k] += s;
            }
          });
        }
        if (!gx.empty()) {
          T* dc = pointwise ? gx.data() + n * C * H * W : dcols.data();
          if (!pointwise) std::fill(dcols.begin(), dcols.end(), T(0));
          parallel_for(K, [&](std::size_t k) {
            T* row = dc + k * P;
            for (std::size_t co = 0; co < Co; ++co) {
              const T wv = wd[co * K + k];
              const T* d = dyn + co * P;
              for (std::size_t p = 0; p < P; ++p) row[p] += wv * d[p];
            }
          });
          if (!pointwise)
            col2im_add(dcols.data(), C, H, W, kh, kw, Ho, Wo, opt,
                       gx.data() + n * C * H * W);
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> maxpool2d(Tape<T>* tape, const Tensor<T>& x, std::size_t k,
                    std::size_t stride) {
  require_rank("maxpool2d", "input", x.shape(), 4);
  if (k < 1 || stride < 1) throw std::invalid_argument("maxpool2d: k and stride must be >= 1");
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % stride != 0)
    throw ShapeError("maxpool2d: height (dim 2) " + std::to_string(H) +
                     " not divisible by stride " + std::to_string(stride));
  if (W % stride != 0)
    throw ShapeError("maxpool2d: width (dim 3) " + std::to_string(W) +
                     " not divisible by stride " + std::to_string(stride));
  if (H < k || W < k) throw ShapeError("maxpool2d: window larger than input");
  const auto Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  auto xd = x.data();
  std::vector<T> out(N * C * Ho * Wo);
  std::vector<std::size_t> arg(out.size());
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* xp = xd.data() + nc * H * W;
    for (std::size_t oh = 0; oh < Ho; ++oh)
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        std::size_t best = (oh * stride) * W + ow * stride;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const auto idx = (oh * stride + i) * W + ow * stride + j;
            if (xp[idx] > xp[best]) best = idx;
          }
        const auto o = (nc * Ho + oh) * Wo + ow;
        out[o] = xp[best];
        arg[o] = nc * H * W + best;
      }
  }
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>({N, C, Ho, Wo}, std::move(out), track);
  if (track) {
    tape->record("maxpool2d", {x}, y, [=, arg = std::move(arg)]() {
      auto dy = y.grad();
      auto gx = grad_of(x);
      for (std::size_t o = 0; o < arg.size(); ++o) gx[arg[o]] += dy[o];
    });
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma,
                      const Tensor<T>& beta, BatchNormState<T>& state,
                      BatchNormOptions opt) {
  require_rank("batchnorm2d", "input", x.shape(), 4);
  const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto HW = H * W;
  const auto M = N * HW;
  for (const Tensor<T>* t : {&gamma, &beta, static_cast<const Tensor<T>*>(&state.running_mean),
                             static_cast<const Tensor<T>*>(&state.running_var)}) {
    require_rank("batchnorm2d", "per-channel parameter", t->shape(), 1);
    if (t->dim(0) != C)
      dim_mismatch("batchnorm2d", "per-channel parameter length (dim 0)", t->dim(0), C);
  }
  if (opt.training && M < 2)
    throw ShapeError("batchnorm2d: training mode needs N*H*W >= 2, got " +
                     std::to_string(M));

  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<T> xhat(x.numel());
  std::vector<T> invstd(C);
  std::vector<T> out(x.numel());
  auto rm = state.running_mean.mutable_data();
  auto rv = state.running_var.mutable_data();
  for (std::size_t c = 0; c < C; ++c) {
    double mean, var;
    if (opt.training) {
      double s = 0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) s += xd[(n * C + c) * HW + p];
      mean = s / static_cast<double>(M);
      double ss = 0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < HW; ++p) {
          const double d = xd[(n * C + c) * HW + p] - mean;
          ss += d * d;
        }
      var = ss / static_cast<double>(M);
      rm[c] = static_cast<T>((1.0 - opt.momentum) * rm[c] + opt.momentum * mean);
      rv[c] = static_cast<T>((1.0 - opt.momentum) * rv[c] + opt.momentum * var);
    } else {
      mean = rm[c];
      var = rv[c];
    }
    const T is = static_cast<T>(1.0 / std::sqrt(var + opt.eps));
    const T mu = static_cast<T>(mean);
    invstd[c] = is;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t p = 0; p < HW; ++p) {
        const auto i = (n * C + c) * HW + p;
        xhat[i] = (xd[i] - mu) * is;
        out[i] = gd[c] * xhat[i] + bd[c];
      }
  }

  const bool track = tracking(tape, {&x, &gamma, &beta});
  auto y = make_output<T>(x.shape(), std::move(out), track);
  if (track) {
    const bool training = opt.training;
    tape->record("batchnorm2d", {x, gamma, beta}, y,
                 [=, xhat = std::move(xhat), invstd = std::move(invstd)]() {
      auto dy = y.grad();
      auto gx = grad_of(x), gg = grad_of(gamma), gb = grad_of(beta);
      auto gd = gamma.data();
      for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t p = 0; p < HW; ++p) {
            const auto i = (n * C + c) * HW + p;
            sum_dy += dy[i];
            sum_dy_xhat += static_cast<double>(dy[i]) * xhat[i];
          }
        if (!gb.empty()) gb[c] += static_cast<T>(sum_dy);
        if (!gg.empty()) gg[c] += static_cast<T>(sum_dy_xhat);
        if (gx.empty()) continue;
        const T k = gd[c] * invstd[c];
        if (training) {
          const T mdy = static_cast<T>(sum_dy / static_cast<double>(M));
          const T mdyx = static_cast<T>(sum_dy_xhat / static_cast<double>(M));
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < HW; ++p) {
              const auto i = (n * C + c) * HW + p;
              gx[i] += k * (dy[i] - mdy - xhat[i] * mdyx);
            }
        } else {
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < HW; ++p) {
              const auto i = (n * C + c) * HW + p;
              gx[i] += k * dy[i];
            }
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>(x.shape(), std::move(out), track);
  if (track)
    tape->record("relu", {x}, y, [=]() {
      auto dy = y.grad();
      auto xd = x.data();
      auto gx = grad_of(x);
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (xd[i] > T(0)) gx[i] += dy[i];
    });
  return y;
}

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& x) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = xd[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>(x.shape(), std::move(out), track);
  if (track)
    tape->record("sigmoid", {x}, y, [=]() {
      auto dy = y.grad();
      auto yd = y.data();
      auto gx = grad_of(x);
      for (std::size_t i = 0; i < gx.size(); ++i)
        gx[i] += dy[i] * yd[i] * (T(1) - yd[i]);
    });
  return y;
}

template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& x, std::size_t axis) {
  const auto& s = x.shape();
  if (axis >= s.size())
    throw ShapeError("softmax: axis " + std::to_string(axis) +
                     " out of range for " + shape_to_string(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const auto len = s[axis];
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const auto base = o * len * inner + in;
      T mx = xd[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xd[base + j * inner]);
      T total = 0;
      for (std::size_t j = 0; j < len; ++j) {
        const T e = std::exp(xd[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
    }
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>(s, std::move(out), track);
  if (track)
    tape->record("softmax", {x}, y, [=]() {
      auto dy = y.grad();
      auto yd = y.data();
      auto gx = grad_of(x);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          const auto base = o * len * inner + in;
          T dot = 0;
          for (std::size_t j = 0; j < len; ++j)
            dot += dy[base + j * inner] * yd[base + j * inner];
          for (std::size_t j = 0; j < len; ++j) {
            const auto i = base + j * inner;
            gx[i] += yd[i] * (dy[i] - dot);
          }
        }
    });
  return y;
}

template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& b) {
  require_rank("linear", "input", x.shape(), 2);
  require_rank("linear", "weight", w.shape(), 2);
  require_rank("linear", "bias", b.shape(), 1);
  const auto N = x.dim(0), D = x.dim(1), M = w.dim(1);
  if (w.dim(0) != D) dim_mismatch("linear", "weight rows (dim 0)", w.dim(0), D);
  if (b.dim(0) != M) dim_mismatch("linear", "bias length (dim 0)", b.dim(0), M);
  auto xd = x.data();
  auto wd = w.data();
  auto bd = b.data();
  std::vector<T> out(N * M);
  parallel_for(N, [&](std::size_t n) {
    T* o = out.data() + n * M;
    std::copy(bd.begin(), bd.end(), o);
    for (std::size_t d = 0; d < D; ++d) {
      const T xv = xd[n * D + d];
      const T* wr = wd.data() + d * M;
      for (std::size_t m = 0; m < M; ++m) o[m] += xv * wr[m];
    }
  });
  const bool track = tracking(tape, {&x, &w, &b});
  auto y = make_output<T>({N, M}, std::move(out), track);
  if (track)
    tape->record("linear", {x, w, b}, y, [=]() {
      auto dy = y.grad();
      auto xd = x.data();
      auto wd = w.data();
      auto gx = grad_of(x), gw = grad_of(w), gb = grad_of(b);
      if (!gb.empty())
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t m = 0; m < M; ++m) gb[m] += dy[n * M + m];
      if (!gx.empty())
        parallel_for(N, [&](std::size_t n) {
          for (std::size_t d = 0; d < D; ++d) {
            const T* wr = wd.data() + d * M;
            T s = 0;
            for (std::size_t m = 0; m < M; ++m) s += dy[n * M + m] * wr[m];
            gx[n * D + d] += s;
          }
        });
      if (!gw.empty())
        parallel_for(D, [&](std::size_t d) {
          T* g = gw.data() + d * M;
          for (std::size_t n = 0; n < N; ++n) {
            const T xv = xd[n * D + d];
            const T* dr = dy.data() + n * M;
            for (std::size_t m = 0; m < M; ++m) g[m] += xv * dr[m];
          }
        });
    });
  return y;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, std::span<const Tensor<T>> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& t : xs) require_rank("concat_channels", "input", t.shape(), 4);
  const auto N = xs[0].dim(0), H = xs[0].dim(2), W = xs[0].dim(3);
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& t = xs[i];
    if (t.dim(0) != N)
      dim_mismatch("concat_channels", "batch (dim 0) of input " + std::to_string(i), t.dim(0), N);
    if (t.dim(2) != H)
      dim_mismatch("concat_channels", "height (dim 2) of input " + std::to_string(i), t.dim(2), H);
    if (t.dim(3) != W)
      dim_mismatch("concat_channels", "width (dim 3) of input " + std::to_string(i), t.dim(3), W);
    offsets.push_back(total);
    total += t.dim(1);
  }
  const auto HW = H * W;
  std::vector<T> out(N * total * HW);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto d = xs[i].data();
    const auto Ci = xs[i].dim(1);
    for (std::size_t n = 0; n < N; ++n)
      std::copy_n(d.data() + n * Ci * HW, Ci * HW,
                  out.data() + (n * total + offsets[i]) * HW);
  }
  bool track = false;
  if (tape)
    for (const auto& t : xs) track = track || t.requires_grad();
  auto y = make_output<T>({N, total, H, W}, std::move(out), track);
  if (track) {
    std::vector<Tensor<T>> inputs(xs.begin(), xs.end());
    tape->record("concat_channels", inputs, y, [=]() {
      auto dy = y.grad();
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto g = grad_of(inputs[i]);
        if (g.empty()) continue;
        const auto Ci = inputs[i].dim(1);
        for (std::size_t n = 0; n < N; ++n) {
          const T* src = dy.data() + (n * total + offsets[i]) * HW;
          T* dst = g.data() + n * Ci * HW;
          for (std::size_t k = 0; k < Ci * HW; ++k) dst[k] += src[k];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> slice_channels(Tape<T>* tape, const Tensor<T>& x, std::size_t begin,
                         std::size_t count) {
  require_rank("slice_channels", "input", x.shape(), 4);
  const auto N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (count == 0 || begin + count > C)
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceeds channels (dim 1) " +
                     std::to_string(C));
  auto xd = x.data();
  std::vector<T> out(N * count * HW);
  for (std::size_t n = 0; n < N; ++n)
    std::copy_n(xd.data() + (n * C + begin) * HW, count * HW,
                out.data() + n * count * HW);
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>({N, count, x.dim(2), x.dim(3)}, std::move(out), track);
  if (track)
    tape->record("slice_channels", {x}, y, [=]() {
      auto dy = y.grad();
      auto gx = grad_of(x);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < count * HW; ++k)
          gx[(n * C + begin) * HW + k] += dy[n * count * HW + k];
    });
  return y;
}

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
  auto ad = a.data(), bd = b.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  const bool track = tracking(tape, {&a, &b});
  auto y = make_output<T>(a.shape(), std::move(out), track);
  if (track)
    tape->record("add", {a, b}, y, [=]() {
      auto dy = y.grad();
      for (const auto* t : {&a, &b}) {
        auto g = grad_of(*t);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
      }
    });
  return y;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mul: shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
  auto ad = a.data(), bd = b.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  const bool track = tracking(tape, {&a, &b});
  auto y = make_output<T>(a.shape(), std::move(out), track);
  if (track)
    tape->record("mul", {a, b}, y, [=]() {
      auto dy = y.grad();
      auto ad = a.data(), bd = b.data();
      auto ga = grad_of(a), gb = grad_of(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += dy[i] * bd[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += dy[i] * ad[i];
    });
  return y;
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * factor;
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>(x.shape(), std::move(out), track);
  if (track)
    tape->record("scale", {x}, y, [=]() {
      auto dy = y.grad();
      auto gx = grad_of(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += dy[i] * factor;
    });
  return y;
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x) {
  T s = 0;
  for (auto v : x.data()) s += v;
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>({1}, {s}, track);
  if (track)
    tape->record("sum", {x}, y, [=]() {
      const T d = y.grad()[0];
      auto gx = grad_of(x);
      for (auto& g : gx) g += d;
    });
  return y;
}

template <typename T>
Tensor<T> flatten(Tape<T>* tape, const Tensor<T>& x) {
  require_rank("flatten", "input", x.shape(), 4);
  const auto N = x.dim(0);
  const auto D = x.numel() / N;
  auto xd = x.data();
  const bool track = tracking(tape, {&x});
  auto y = make_output<T>({N, D}, std::vector<T>(xd.begin(), xd.end()), track);
  if (track)
    tape->record("flatten", {x}, y, [=]() {
      auto dy = y.grad();
      auto gx = grad_of(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += dy[i];
    });
  return y;
}

template <typename T>
Tensor<T> pairwise_dot(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_rank("pairwise_dot", "first input", a.shape(), 4);
  if (a.shape() != b.shape())
    throw ShapeError("pairwise_dot: shapes " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()) + " differ");
  const auto N = a.dim(0), C = a.dim(1), P = a.dim(2) * a.dim(3);
  auto ad = a.data(), bd = b.data();
  std::vector<T> out(N * P * P, T(0));
  parallel_for(N, [&](std::size_t n) {
    T* s = out.data() + n * P * P;
    for (std::size_t c = 0; c < C; ++c) {
      const T* ar = ad.data() + (n * C + c) * P;
      const T* br = bd.data() + (n * C + c) * P;
      for (std::size_t i = 0; i < P; ++i) {
        const T av = ar[i];
        T* row = s + i * P;
        for (std::size_t j = 0; j < P; ++j) row[j] += av * br[j];
      }
    }
  });
  const bool track = tracking(tape, {&a, &b});
  auto y = make_output<T>({N, 1, P, P}, std::move(out), track);
  if (track)
    tape->record("pairwise_dot", {a, b}, y, [=]() {
      auto dy = y.grad();
      auto ad = a.data(), bd = b.data();
      auto ga = grad_of(a), gb = grad_of(b);
      parallel_for(N, [&](std::size_t n) {
        const T* ds = dy.data() + n * P * P;
        for (std::size_t c = 0; c < C; ++c) {
          const auto off = (n * C + c) * P;
          for (std::size_t i = 0; i < P; ++i) {
            const T* row = ds + i * P;
            if (!ga.empty()) {
              T s = 0;
              for (std::size_t j = 0; j < P; ++j) s += row[j] * bd[off + j];
              ga[off + i] += s;
            }
            if (!gb.empty()) {
              const T av = ad[off + i];
              for (std::size_t j = 0; j < P; ++j) gb[off + j] += av * row[j];
            }
          }
        }
      });
    });
  return y;
}

template <typename T>
Tensor<T> attend(Tape<T>* tape, const Tensor<T>& f, const Tensor<T>& g) {
  require_rank("attend", "weights", f.shape(), 4);
  require_rank("attend", "values", g.shape(), 4);
  const auto N = g.dim(0), C = g.dim(1), P = g.dim(2) * g.dim(3);
  if (f.dim(0) != N) dim_mismatch("attend", "weights batch (dim 0)", f.dim(0), N);
  if (f.dim(1) != 1) dim_mismatch("attend", "weights channels (dim 1)", f.dim(1), 1);
  if (f.dim(2) != P) dim_mismatch("attend", "weights rows (dim 2)", f.dim(2), P);
  if (f.dim(3) != P) dim_mismatch("attend", "weights columns (dim 3)", f.dim(3), P);
  auto fd = f.data(), gd = g.data();
  std::vector<T> out(N * C * P);
  parallel_for(N, [&](std::size_t n) {
    const T* fm = fd.data() + n * P * P;
    for (std::size_t c = 0; c < C; ++c) {
      const T* gr = gd.data() + (n * C + c) * P;
      T* o = out.data() + (n * C + c) * P;
      for (std::size_t i = 0; i < P; ++i) {
        const T* fr = fm + i * P;
        T s = 0;
        for (std::size_t j = 0; j < P; ++j) s += fr[j] * gr[j];
        o[i] = s;
      }
    }
  });
  const bool track = tracking(tape, {&f, &g});
  auto y = make_output<T>(g.shape(), std::move(out), track);
  if (track)
    tape->record("attend", {f, g}, y, [=]() {
      auto dy = y.grad();
      auto fd = f.data(), gd = g.data();
      auto gf = grad_of(f), gg = grad_of(g);
      parallel_for(N, [&](std::size_t n) {
        const T* fm = fd.data() + n * P * P;
        for (std::size_t c = 0; c < C; ++c) {
          const auto off = (n * C + c) * P;
          for (std::size_t i = 0; i < P; ++i) {
            const T d = dy[off + i];
            if (!gf.empty()) {
              T* frow = gf.data() + n * P * P + i * P;
              for (std::size_t j = 0; j < P; ++j) frow[j] += d * gd[off + j];
            }
            if (!gg.empty()) {
              const T* fr = fm + i * P;
              for (std::size_t j = 0; j < P; ++j) gg[off + j] += fr[j] * d;
            }
          }
        }
      });
    });
  return y;
}

template <typename T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits,
                        std::span<const int> labels) {
  require_rank("cross_entropy", "logits", logits.shape(), 2);
  const auto N = logits.dim(0), K = logits.dim(1);
  if (labels.size() != N)
    dim_mismatch("cross_entropy", "label count", labels.size(), N);
  for (std::size_t n = 0; n < N; ++n)
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= K)
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[n]) +
                              " at row " + std::to_string(n) + " outside [0, " +
                              std::to_string(K) + ")");
  auto ld = logits.data();
  std::vector<T> prob(N * K);
  double loss = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const T* r = ld.data() + n * K;
    const T mx = *std::max_element(r, r + K);
    T total = 0;
    for (std::size_t k = 0; k < K; ++k) total += std::exp(r[k] - mx);
    const T lse = mx + std::log(total);
    for (std::size_t k = 0; k < K; ++k) prob[n * K + k] = std::exp(r[k] - lse);
    loss += static_cast<double>(lse - r[labels[n]]);
  }
  loss /= static_cast<double>(N);
  const bool track = tracking(tape, {&logits});
  auto y = make_output<T>({1}, {static_cast<T>(loss)}, track);
  if (track) {
    std::vector<int> lab(labels.begin(), labels.end());
    tape->record("cross_entropy", {logits}, y,
                 [=, prob = std::move(prob), lab = std::move(lab)]() {
      const T d = y.grad()[0] / static_cast<T>(N);
      auto g = grad_of(logits);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < K; ++k) {
          const T onehot = static_cast<std::size_t>(lab[n]) == k ? T(1) : T(0);
          g[n * K + k] += d * (prob[n * K + k] - onehot);
        }
    });
  }
  return y;
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& img, std::size_t out_h,
                          std::size_t out_w) {
  require_rank("bilinear_resize", "image", img.shape(), 3);
  if (out_h == 0 || out_w == 0)
    throw std::invalid_argument("bilinear_resize: target extents must be positive");
  const auto C = img.dim(0), H = img.dim(1), W = img.dim(2);
  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      const auto i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(H, out_h), tx = taps(W, out_w);
  auto d = img.data();
  std::vector<T> out(C * out_h * out_w);
  for (std::size_t c = 0; c < C; ++c) {
    const T* p = d.data() + c * H * W;
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto& a = ty[y];
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& b = tx[x];
        const double top = p[a.i0 * W + b.i0] * (1 - b.frac) + p[a.i0 * W + b.i1] * b.frac;
        const double bot = p[a.i1 * W + b.i0] * (1 - b.frac) + p[a.i1 * W + b.i1] * b.frac;
        out[(c * out_h + y) * out_w + x] = static_cast<T>(top * (1 - a.frac) + bot * a.frac);
      }
    }
  }
  return Tensor<T>({C, out_h, out_w}, std::move(out));
}

#define DPG_INSTANTIATE_OPS(T)                                                   \
  template Tensor<T> conv2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&,        \
                            const Tensor<T>&, Conv2dOptions);                    \
  template Tensor<T> maxpool2d(Tape<T>*, const Tensor<T>&, std::size_t,          \
                               std::size_t);                                     \
  template Tensor<T> batchnorm2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                                 const Tensor<T>&, BatchNormState<T>&,           \
                                 BatchNormOptions);                              \
  template Tensor<T> relu(Tape<T>*, const Tensor<T>&);                           \
  template Tensor<T> sigmoid(Tape<T>*, const Tensor<T>&);                        \
  template Tensor<T> softmax(Tape<T>*, const Tensor<T>&, std::size_t);           \
  template Tensor<T> linear(Tape<T>*, const Tensor<T>&, const Tensor<T>&,        \
                            const Tensor<T>&);                                   \
  template Tensor<T> concat_channels(Tape<T>*, std::span<const Tensor<T>>);      \
  template Tensor<T> slice_channels(Tape<T>*, const Tensor<T>&, std::size_t,     \
                                    std::size_t);                                \
  template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> scale(Tape<T>*, const Tensor<T>&, T);                       \
  template Tensor<T> sum(Tape<T>*, const Tensor<T>&);                            \
  template Tensor<T> flatten(Tape<T>*, const Tensor<T>&);                        \
  template Tensor<T> pairwise_dot(Tape<T>*, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> attend(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> cross_entropy(Tape<T>*, const Tensor<T>&,                   \
                                   std::span<const int>);                        \
  template Tensor<T> bilinear_resize(const Tensor<T>&, std::size_t, std::size_t);

DPG_INSTANTIATE_OPS(float)
DPG_INSTANTIATE_OPS(double)

#undef DPG_INSTANTIATE_OPS

}  // namespace dpg::ops
