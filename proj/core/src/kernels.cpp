#include "stereovid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace stereovid {
namespace {

void check_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(what) + ": expected rank " +
                                std::to_string(rank) + ", got shape " +
                                t.shape_str());
  }
}

int out_extent(int in, int pad, int k, int stride, const char* axis,
               const char* what) {
  const int span = in + 2 * pad - k;
  if (span < 0 || stride < 1) {
    throw std::invalid_argument(std::string(what) + ": kernel extent " +
                                std::to_string(k) + " exceeds padded input " +
                                std::to_string(in + 2 * pad) + " along " + axis);
  }
  return span / stride + 1;
}

// Valid output range [lo, hi) so that ox*stride - pad + kx stays inside [0, w).
inline void valid_range(int w, int out_w, int stride, int pad, int kx, int* lo,
                        int* hi) {
  int shift = pad - kx;  // ix = ox*stride - shift
  int l = 0;
  if (shift > 0) l = (shift + stride - 1) / stride;
  int h = out_w;
  // need ox*stride - shift <= w - 1  =>  ox <= (w - 1 + shift) / stride
  const int max_ox = (w - 1 + shift) / stride;
  if (max_ox + 1 < h) h = max_ox + 1;
  if (w - 1 + shift < 0) h = l;
  *lo = l;
  *hi = std::max(l, h);
}

#if defined(__AVX512F__)

// Register-accumulating path: the input is copied once into a zero-padded
// buffer so the tap loops run without bounds checks, and each 16-wide output
// chunk accumulates in a single register across all channels and taps.
Tensor conv3d_avx512(const Tensor& input, const Tensor& kernel,
                     const Tensor* bias, int pad_t, int pad_h, int pad_w,
                     int ot, int oh, int ow) {
  const int c = input.extent(0), t = input.extent(1);
  const int h = input.extent(2), w = input.extent(3);
  const int o = kernel.extent(0);
  const int kt = kernel.extent(2), kh = kernel.extent(3), kw = kernel.extent(4);

  const int pt = t + 2 * pad_t, ph = h + 2 * pad_h, pw = w + 2 * pad_w;
  std::vector<float> padded(static_cast<size_t>(c) * pt * ph * pw, 0.0f);
  for (int ic = 0; ic < c; ++ic) {
    const float* src = input.data() + static_cast<std::int64_t>(ic) * t * h * w;
    float* dst = padded.data() + static_cast<std::int64_t>(ic) * pt * ph * pw;
    for (int it = 0; it < t; ++it) {
      for (int iy = 0; iy < h; ++iy) {
        std::copy_n(src + (static_cast<std::int64_t>(it) * h + iy) * w, w,
                    dst + ((static_cast<std::int64_t>(it + pad_t) * ph) +
                           (iy + pad_h)) * pw + pad_w);
      }
    }
  }

  Tensor out({o, ot, oh, ow});
  const std::int64_t cstride = static_cast<std::int64_t>(pt) * ph * pw;
  const int taps = kt * kh * kw;
  // tap offsets into the padded buffer relative to an output position
  std::vector<std::int64_t> tap_off(static_cast<size_t>(taps));
  {
    int i = 0;
    for (int tk = 0; tk < kt; ++tk)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx)
          tap_off[i++] = (static_cast<std::int64_t>(tk) * ph + ky) * pw + kx;
  }

  const int oblocks = (o + 3) / 4;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < oblocks; ++blk) {
    const int oc0 = blk * 4;
    const int ob = std::min(4, o - oc0);
    const float* kb[4];
    float bset[4];
    float* out_ch[4];
    for (int j = 0; j < 4; ++j) {
      const int oc = oc0 + std::min(j, ob - 1);
      kb[j] = kernel.data() + static_cast<std::int64_t>(oc) * c * taps;
      bset[j] = bias ? bias->data()[oc] : 0.0f;
      out_ch[j] = out.data() + static_cast<std::int64_t>(oc) * ot * oh * ow;
    }
    for (int oty = 0; oty < ot; ++oty) {
      for (int oyy = 0; oyy < oh; ++oyy) {
        const float* const row0 =
            padded.data() + (static_cast<std::int64_t>(oty) * ph + oyy) * pw;
        const std::int64_t orow = (static_cast<std::int64_t>(oty) * oh + oyy) * ow;
        for (int ox0 = 0; ox0 < ow; ox0 += 16) {
          const int lanes = std::min(16, ow - ox0);
          const __mmask16 m = static_cast<__mmask16>((1u << lanes) - 1u);
          __m512 a0 = _mm512_set1_ps(bset[0]);
          __m512 a1 = _mm512_set1_ps(bset[1]);
          __m512 a2 = _mm512_set1_ps(bset[2]);
          __m512 a3 = _mm512_set1_ps(bset[3]);
          const float* k0 = kb[0];
          const float* k1 = kb[1];
          const float* k2 = kb[2];
          const float* k3 = kb[3];
          if (lanes == 16) {
            for (int ic = 0; ic < c; ++ic) {
              const float* const cell = row0 + ic * cstride + ox0;
              for (int tp = 0; tp < taps; ++tp) {
                const __m512 v = _mm512_loadu_ps(cell + tap_off[tp]);
                a0 = _mm512_fmadd_ps(_mm512_set1_ps(k0[tp]), v, a0);
                a1 = _mm512_fmadd_ps(_mm512_set1_ps(k1[tp]), v, a1);
                a2 = _mm512_fmadd_ps(_mm512_set1_ps(k2[tp]), v, a2);
                a3 = _mm512_fmadd_ps(_mm512_set1_ps(k3[tp]), v, a3);
              }
              k0 += taps;
              k1 += taps;
              k2 += taps;
              k3 += taps;
            }
            _mm512_storeu_ps(out_ch[0] + orow + ox0, a0);
            if (ob > 1) _mm512_storeu_ps(out_ch[1] + orow + ox0, a1);
            if (ob > 2) _mm512_storeu_ps(out_ch[2] + orow + ox0, a2);
            if (ob > 3) _mm512_storeu_ps(out_ch[3] + orow + ox0, a3);
          } else {
            for (int ic = 0; ic < c; ++ic) {
              const float* const cell = row0 + ic * cstride + ox0;
              for (int tp = 0; tp < taps; ++tp) {
                const __m512 v = _mm512_maskz_loadu_ps(m, cell + tap_off[tp]);
                a0 = _mm512_fmadd_ps(_mm512_set1_ps(k0[tp]), v, a0);
                a1 = _mm512_fmadd_ps(_mm512_set1_ps(k1[tp]), v, a1);
                a2 = _mm512_fmadd_ps(_mm512_set1_ps(k2[tp]), v, a2);
                a3 = _mm512_fmadd_ps(_mm512_set1_ps(k3[tp]), v, a3);
              }
              k0 += taps;
              k1 += taps;
              k2 += taps;
              k3 += taps;
            }
            _mm512_mask_storeu_ps(out_ch[0] + orow + ox0, m, a0);
            if (ob > 1) _mm512_mask_storeu_ps(out_ch[1] + orow + ox0, m, a1);
            if (ob > 2) _mm512_mask_storeu_ps(out_ch[2] + orow + ox0, m, a2);
            if (ob > 3) _mm512_mask_storeu_ps(out_ch[3] + orow + ox0, m, a3);
          }
        }
      }
    }
  }
  return out;
}

#endif  // __AVX512F__

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int stride, int padding) {
  check_rank(input, 3, "conv2d input");
  check_rank(kernel, 4, "conv2d kernel");
  const int c = input.extent(0), h = input.extent(1), w = input.extent(2);
  const int o = kernel.extent(0), kc = kernel.extent(1);
  const int kh = kernel.extent(2), kw = kernel.extent(3);
  if (kc != c) {
    throw std::invalid_argument(
        "conv2d: kernel input-channel extent " + std::to_string(kc) +
        " does not match input channel extent " + std::to_string(c));
  }
  if (bias && (bias->rank() != 1 || bias->extent(0) != o)) {
    throw std::invalid_argument("conv2d: bias shape " + bias->shape_str() +
                                " does not match " + std::to_string(o) +
                                " output channels");
  }
  const int oh = out_extent(h, padding, kh, stride, "H", "conv2d");
  const int ow = out_extent(w, padding, kw, stride, "W", "conv2d");

#if defined(__AVX512F__)
  if (stride == 1) {
    Tensor in3 = input;
    in3.reshape({c, 1, h, w});
    Tensor k3 = kernel;
    k3.reshape({o, c, 1, kh, kw});
    Tensor out3 = conv3d(in3, k3, bias, 0, padding, padding);
    out3.reshape({o, oh, ow});
    return out3;
  }
#endif

  Tensor out({o, oh, ow});
  const float* in = input.data();
  const float* kk = kernel.data();
  float* op = out.data();

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < o; ++oc) {
    float* const out_ch = op + static_cast<std::int64_t>(oc) * oh * ow;
    const float b = bias ? bias->data()[oc] : 0.0f;
    for (int i = 0; i < oh * ow; ++i) out_ch[i] = b;
    for (int ic = 0; ic < c; ++ic) {
      const float* const in_ch = in + static_cast<std::int64_t>(ic) * h * w;
      const float* kch = kk + ((static_cast<std::int64_t>(oc) * c + ic) * kh) * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const float kv = kch[ky * kw + kx];
          int lo, hi;
          valid_range(w, ow, stride, padding, kx, &lo, &hi);
          // valid oy range: 0 <= oy*stride - padding + ky < h
          int oy_lo, oy_hi;
          valid_range(h, oh, stride, padding, ky, &oy_lo, &oy_hi);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy * stride - padding + ky;
            float* __restrict__ out_row = out_ch + static_cast<std::int64_t>(oy) * ow;
            if (stride == 1) {
              const float* __restrict__ src =
                  in_ch + static_cast<std::int64_t>(iy) * w - padding + kx;
              for (int ox = lo; ox < hi; ++ox) out_row[ox] += kv * src[ox];
            } else {
              const float* __restrict__ in_row =
                  in_ch + static_cast<std::int64_t>(iy) * w;
              for (int ox = lo; ox < hi; ++ox) {
                out_row[ox] += kv * in_row[ox * stride - padding + kx];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor* bias,
              int pad_t, int pad_h, int pad_w) {
  check_rank(input, 4, "conv3d input");
  check_rank(kernel, 5, "conv3d kernel");
  const int c = input.extent(0), t = input.extent(1);
  const int h = input.extent(2), w = input.extent(3);
  const int o = kernel.extent(0), kc = kernel.extent(1);
  const int kt = kernel.extent(2), kh = kernel.extent(3), kw = kernel.extent(4);
  if (kc != c) {
    throw std::invalid_argument(
        "conv3d: kernel input-channel extent " + std::to_string(kc) +
        " does not match input channel extent " + std::to_string(c));
  }
  const int ot = out_extent(t, pad_t, kt, 1, "T", "conv3d");
  const int oh = out_extent(h, pad_h, kh, 1, "H", "conv3d");
  const int ow = out_extent(w, pad_w, kw, 1, "W", "conv3d");
  if (bias && (bias->rank() != 1 || bias->extent(0) != o)) {
    throw std::invalid_argument("conv3d: bias shape " + bias->shape_str() +
                                " does not match " + std::to_string(o) +
                                " output channels");
  }

#if defined(__AVX512F__)
  return conv3d_avx512(input, kernel, bias, pad_t, pad_h, pad_w, ot, oh, ow);
#endif

  Tensor out({o, ot, oh, ow});
  const float* in = input.data();
  const float* kk = kernel.data();

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < o; ++oc) {
    float* const out_ch = out.data() + static_cast<std::int64_t>(oc) * ot * oh * ow;
    const float b = bias ? bias->data()[oc] : 0.0f;
    for (int i = 0; i < ot * oh * ow; ++i) out_ch[i] = b;
    for (int ic = 0; ic < c; ++ic) {
      const float* const in_ch = in + static_cast<std::int64_t>(ic) * t * h * w;
      const float* kch =
          kk + (((static_cast<std::int64_t>(oc) * c + ic) * kt) * kh) * kw;
      for (int tk = 0; tk < kt; ++tk) {
        const int ot_lo = std::max(0, pad_t - tk);
        const int ot_hi = std::min(ot, t + pad_t - tk);
        for (int ky = 0; ky < kh; ++ky) {
          const int oy_lo = std::max(0, pad_h - ky);
          const int oy_hi = std::min(oh, h + pad_h - ky);
          for (int kx = 0; kx < kw; ++kx) {
            const float kv = kch[(tk * kh + ky) * kw + kx];
            int lo, hi;
            valid_range(w, ow, 1, pad_w, kx, &lo, &hi);
            for (int oty = ot_lo; oty < ot_hi; ++oty) {
              const int it = oty - pad_t + tk;
              const float* const in_t = in_ch + static_cast<std::int64_t>(it) * h * w;
              float* const out_t = out_ch + static_cast<std::int64_t>(oty) * oh * ow;
              for (int oyy = oy_lo; oyy < oy_hi; ++oyy) {
                const int iy = oyy - pad_h + ky;
                const float* __restrict__ src =
                    in_t + static_cast<std::int64_t>(iy) * w - pad_w + kx;
                float* __restrict__ out_row =
                    out_t + static_cast<std::int64_t>(oyy) * ow;
                for (int ox = lo; ox < hi; ++ox) out_row[ox] += kv * src[ox];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

void check_separable_factor(const Tensor& k, bool want_t, bool want_h,
                            bool want_w, const char* name) {
  if (k.rank() != 5) {
    throw std::invalid_argument(std::string("conv3d_separable: factor ") + name +
                                " must have rank 5, got " + k.shape_str());
  }
  const int kt = k.extent(2), kh = k.extent(3), kw = k.extent(4);
  auto bad = [&](const char* axis) {
    throw std::invalid_argument(std::string("conv3d_separable: factor ") + name +
                                " has unsupported extent along " + axis + ": " +
                                k.shape_str());
  };
  if (want_t ? (kt % 2 == 0) : (kt != 1)) bad("T");
  if (want_h ? (kh % 2 == 0) : (kh != 1)) bad("H");
  if (want_w ? (kw % 2 == 0) : (kw != 1)) bad("W");
}

}  // namespace

Tensor conv3d_separable(const Tensor& input, const SeparableKernel3d& k) {
  check_separable_factor(k.width_w, false, false, true, "(1,1,kw)");
  check_separable_factor(k.time_w, true, false, false, "(kt,1,1)");
  check_separable_factor(k.plane_w, false, true, true, "(1,kh,kw)");
  if (k.time_w.extent(1) != k.width_w.extent(0)) {
    throw std::invalid_argument(
        "conv3d_separable: time factor expects " +
        std::to_string(k.time_w.extent(1)) + " channels, width factor yields " +
        std::to_string(k.width_w.extent(0)));
  }
  if (k.plane_w.extent(1) != k.time_w.extent(0)) {
    throw std::invalid_argument(
        "conv3d_separable: plane factor expects " +
        std::to_string(k.plane_w.extent(1)) + " channels, time factor yields " +
        std::to_string(k.time_w.extent(0)));
  }
  Tensor a = conv3d(input, k.width_w, k.width_b.empty() ? nullptr : &k.width_b,
                    0, 0, k.width_w.extent(4) / 2);
  Tensor b = conv3d(a, k.time_w, k.time_b.empty() ? nullptr : &k.time_b,
                    k.time_w.extent(2) / 2, 0, 0);
  return conv3d(b, k.plane_w, k.plane_b.empty() ? nullptr : &k.plane_b, 0,
                k.plane_w.extent(3) / 2, k.plane_w.extent(4) / 2);
}

Tensor avg_pool2d(const Tensor& input, int factor) {
  if (input.rank() < 2) {
    throw std::invalid_argument("avg_pool2d: input must have rank >= 2, got " +
                                input.shape_str());
  }
  if (factor < 1) throw std::invalid_argument("avg_pool2d: factor must be >= 1");
  const int h = input.extent(input.rank() - 2);
  const int w = input.extent(input.rank() - 1);
  if (h % factor != 0 || w % factor != 0) {
    throw std::invalid_argument("avg_pool2d: extents " + std::to_string(h) +
                                "x" + std::to_string(w) +
                                " not divisible by factor " +
                                std::to_string(factor));
  }
  std::vector<int> out_shape = input.shape();
  const int oh = h / factor, ow = w / factor;
  out_shape[input.rank() - 2] = oh;
  out_shape[input.rank() - 1] = ow;
  Tensor out(out_shape);
  const std::int64_t planes = input.size() / (static_cast<std::int64_t>(h) * w);
  const float inv = 1.0f / (static_cast<float>(factor) * factor);
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* in = input.data() + p * h * w;
    float* op = out.data() + p * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float s = 0.0f;
        for (int dy = 0; dy < factor; ++dy) {
          const float* row = in + (oy * factor + dy) * static_cast<std::int64_t>(w) +
                             ox * factor;
          for (int dx = 0; dx < factor; ++dx) s += row[dx];
        }
        op[oy * ow + ox] = s * inv;
      }
    }
  }
  return out;
}

float bilinear_at_zero(const Tensor& plane, float y, float x) {
  const int h = plane.extent(plane.rank() - 2);
  const int w = plane.extent(plane.rank() - 1);
  const float yf = std::floor(y), xf = std::floor(x);
  const int y0 = static_cast<int>(yf), x0 = static_cast<int>(xf);
  const float dy = y - yf, dx = x - xf;
  const float* d = plane.data();
  auto value = [&](int yy, int xx) -> float {
    if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0f;
    return d[static_cast<std::int64_t>(yy) * w + xx];
  };
  return (1.0f - dy) * ((1.0f - dx) * value(y0, x0) + dx * value(y0, x0 + 1)) +
         dy * ((1.0f - dx) * value(y0 + 1, x0) + dx * value(y0 + 1, x0 + 1));
}

std::vector<float> bilinear_sample(
    const Tensor& plane, const std::vector<std::pair<float, float>>& coords) {
  if (plane.rank() != 2) {
    throw std::invalid_argument("bilinear_sample: expected rank-2 input, got " +
                                plane.shape_str());
  }
  std::vector<float> out;
  out.reserve(coords.size());
  for (const auto& [y, x] : coords) out.push_back(bilinear_at_zero(plane, y, x));
  return out;
}

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w) {
  if (input.rank() < 2) {
    throw std::invalid_argument("bilinear_resize: input must have rank >= 2");
  }
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("bilinear_resize: output extents must be >= 1");
  }
  const int h = input.extent(input.rank() - 2);
  const int w = input.extent(input.rank() - 1);
  std::vector<int> out_shape = input.shape();
  out_shape[input.rank() - 2] = out_h;
  out_shape[input.rank() - 1] = out_w;
  Tensor out(out_shape);
  const std::int64_t planes = input.size() / (static_cast<std::int64_t>(h) * w);
  const float sy = static_cast<float>(h) / out_h;
  const float sx = static_cast<float>(w) / out_w;
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* in = input.data() + p * h * w;
    float* op = out.data() + p * static_cast<std::int64_t>(out_h) * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      float y = (oy + 0.5f) * sy - 0.5f;
      y = std::min(std::max(y, 0.0f), static_cast<float>(h - 1));
      const int y0 = static_cast<int>(y);
      const int y1 = std::min(y0 + 1, h - 1);
      const float dy = y - y0;
      for (int ox = 0; ox < out_w; ++ox) {
        float x = (ox + 0.5f) * sx - 0.5f;
        x = std::min(std::max(x, 0.0f), static_cast<float>(w - 1));
        const int x0 = static_cast<int>(x);
        const int x1 = std::min(x0 + 1, w - 1);
        const float dx = x - x0;
        const float top = (1.0f - dx) * in[y0 * static_cast<std::int64_t>(w) + x0] +
                          dx * in[y0 * static_cast<std::int64_t>(w) + x1];
        const float bot = (1.0f - dx) * in[y1 * static_cast<std::int64_t>(w) + x0] +
                          dx * in[y1 * static_cast<std::int64_t>(w) + x1];
        op[oy * static_cast<std::int64_t>(out_w) + ox] = (1.0f - dy) * top + dy * bot;
      }
    }
  }
  return out;
}

Tensor softmax(const Tensor& input, int axis) {
  if (axis < 0 || axis >= input.rank()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " out of range for " + input.shape_str());
  }
  const int n = input.extent(axis);
  std::int64_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= input.extent(a);
  for (int a = axis + 1; a < input.rank(); ++a) inner *= input.extent(a);

  Tensor out(input.shape());
  const float* in = input.data();
  float* op = out.data();
  for (std::int64_t t = 0; t < outer; ++t) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = t * n * inner + i;
      float mx = in[base];
      for (int j = 1; j < n; ++j) mx = std::max(mx, in[base + j * inner]);
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        const float e = std::exp(in[base + j * inner] - mx);
        op[base + j * inner] = e;
        sum += e;
      }
      const float norm = static_cast<float>(1.0 / sum);
      for (int j = 0; j < n; ++j) op[base + j * inner] *= norm;
    }
  }
  return out;
}

Tensor instance_norm(const Tensor& input, const Tensor& gain, const Tensor& bias,
                     float eps) {
  check_rank(input, 3, "instance_norm input");
  const int c = input.extent(0), h = input.extent(1), w = input.extent(2);
  if (gain.size() != c || bias.size() != c) {
    throw std::invalid_argument("instance_norm: affine shape mismatch for " +
                                std::to_string(c) + " channels");
  }
  Tensor out(input.shape());
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const float* in = input.data() + ch * plane;
    float* op = out.data() + ch * plane;
    double mean = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) mean += in[i];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) {
      const double dlt = in[i] - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(plane);
    const float scale =
        (1.0f + gain.data()[ch]) / std::sqrt(static_cast<float>(var) + eps);
    const float shift = bias.data()[ch] - static_cast<float>(mean) * scale;
    for (std::int64_t i = 0; i < plane; ++i) op[i] = in[i] * scale + shift;
  }
  return out;
}

void relu_inplace(Tensor& t) {
  float* d = t.data();
  const std::int64_t n = t.size();
  for (std::int64_t i = 0; i < n; ++i) d[i] = d[i] > 0.0f ? d[i] : 0.0f;
}

void sigmoid_inplace(Tensor& t) {
  float* d = t.data();
  const std::int64_t n = t.size();
  for (std::int64_t i = 0; i < n; ++i) d[i] = 1.0f / (1.0f + std::exp(-d[i]));
}

void tanh_inplace(Tensor& t) {
  float* d = t.data();
  const std::int64_t n = t.size();
  for (std::int64_t i = 0; i < n; ++i) d[i] = std::tanh(d[i]);
}

}  // namespace stereovid
