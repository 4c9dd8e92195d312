#include "posemo/neural.hpp"

#include <algorithm>
#include <numeric>

namespace posemo {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteActivation, std::string("non-finite ") + what);
  }
}

// out[o] (h x w) = bias[o] + sum_i w[o][i] * in[i], zero padding.
void conv3x3_forward(const double* in, std::size_t cin, std::size_t h, std::size_t w, const double* weight,
                     const double* bias, std::size_t cout, double* out) {
  const std::size_t hw = h * w;
  for (std::size_t o = 0; o < cout; ++o) {
    double* dst = out + o * hw;
    std::fill(dst, dst + hw, bias[o]);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in + i * hw;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = weight[((o * cin + i) * 3 + ky) * 3 + kx];
          const int dy = ky - 1, dx = kx - 1;
          const std::size_t y0 = dy < 0 ? 1 : 0, y1 = dy > 0 ? h - 1 : h;
          const std::size_t x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? w - 1 : w;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* s = src + (y + dy) * w + dx;
            double* d = dst + y * w;
            for (std::size_t x = x0; x < x1; ++x) d[x] += wv * s[x];
          }
        }
      }
    }
  }
}

void conv3x3_backward(const double* in, std::size_t cin, std::size_t h, std::size_t w, const double* weight,
                      std::size_t cout, const double* dout, double* dweight, double* dbias, double* din) {
  const std::size_t hw = h * w;
  for (std::size_t o = 0; o < cout; ++o) {
    const double* g = dout + o * hw;
    double sb = 0.0;
    for (std::size_t k = 0; k < hw; ++k) sb += g[k];
    dbias[o] += sb;
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in + i * hw;
      double* dsrc = din ? din + i * hw : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const std::size_t wi = ((o * cin + i) * 3 + ky) * 3 + kx;
          const double wv = weight[wi];
          const int dy = ky - 1, dx = kx - 1;
          const std::size_t y0 = dy < 0 ? 1 : 0, y1 = dy > 0 ? h - 1 : h;
          const std::size_t x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? w - 1 : w;
          double sw = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* s = src + (y + dy) * w + dx;
            const double* gg = g + y * w;
            for (std::size_t x = x0; x < x1; ++x) sw += gg[x] * s[x];
            if (dsrc) {
              double* ds = dsrc + (y + dy) * w + dx;
              for (std::size_t x = x0; x < x1; ++x) ds[x] += wv * gg[x];
            }
          }
          dweight[wi] += sw;
        }
      }
    }
  }
}

double bce_term(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

void fill_normal(std::vector<double>& p, std::size_t off, std::size_t n, double sd, Rng& rng) {
  for (std::size_t k = 0; k < n; ++k) p[off + k] = rng.normal(0.0, sd);
}

void fill_uniform(std::vector<double>& p, std::size_t off, std::size_t n, double a, Rng& rng) {
  for (std::size_t k = 0; k < n; ++k) p[off + k] = rng.uniform(-a, a);
}

void write_params(ByteWriter& out, const std::vector<double>& p) {
  out.u64(p.size());
  out.f64s(p);
}

std::vector<double> read_params(ByteReader& in, std::size_t expected) {
  const auto n = in.u64();
  if (n != expected) throw Error(ErrorCode::MalformedFile, "checkpoint parameter count does not match its shape");
  if (n > in.remaining() / 8) throw Error(ErrorCode::MalformedFile, "truncated checkpoint");
  return in.f64s(n);
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

double bce_with_logits(std::span<const double> logits, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) s += bce_term(logits[c], target[c]);
  return s / static_cast<double>(logits.size());
}

// ---- ConvEncoder ----

struct ConvEncoder::Cache {
  std::vector<std::vector<double>> inputs;  // input of each block
  std::vector<std::vector<double>> act;     // tanh output of each block
  std::vector<double> pooled;               // global average pool
  std::vector<double> logits;
};

ConvEncoder::ConvEncoder(Shape shape, std::uint64_t seed) : shape_(std::move(shape)), seed_(seed) {
  build_layout();
  Rng rng(seed);
  std::size_t cin = shape_.in_channels;
  for (std::size_t b = 0; b < shape_.channels.size(); ++b) {
    const auto cout = shape_.channels[b];
    fill_normal(params_, conv_[b].w, cout * cin * 9, std::sqrt(1.0 / static_cast<double>(cin * 9)), rng);
    cin = cout;
  }
  fill_normal(params_, head_w_, shape_.classes * cin, std::sqrt(1.0 / static_cast<double>(cin)), rng);
}

void ConvEncoder::build_layout() {
  if (shape_.channels.empty() || shape_.in_channels == 0 || shape_.classes == 0) {
    throw Error(ErrorCode::ShapeMismatch, "encoder needs at least one block, input channel and class");
  }
  std::size_t h = shape_.height, w = shape_.width, cin = shape_.in_channels, off = 0;
  conv_.clear();
  dims_.clear();
  for (auto cout : shape_.channels) {
    if (h < 2 || w < 2 || cout == 0) throw Error(ErrorCode::ShapeMismatch, "image too small for the encoder depth");
    dims_.push_back(h);
    dims_.push_back(w);
    conv_.push_back({off, off + cout * cin * 9});
    off += cout * cin * 9 + cout;
    h /= 2;
    w /= 2;
    cin = cout;
  }
  dims_.push_back(h);
  dims_.push_back(w);
  head_w_ = off;
  head_b_ = off + shape_.classes * cin;
  params_.assign(head_b_ + shape_.classes, 0.0);
}

void ConvEncoder::forward(std::span<const double> input, Cache& cache) const {
  if (input.size() != input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "encoder input has " + std::to_string(input.size()) + " values, expected " +
                                              std::to_string(input_size()));
  }
  const auto nb = shape_.channels.size();
  cache.inputs.resize(nb + 1);
  cache.act.resize(nb);
  cache.inputs[0].assign(input.begin(), input.end());
  std::size_t cin = shape_.in_channels;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto h = dims_[2 * b], w = dims_[2 * b + 1];
    const auto ph = dims_[2 * b + 2], pw = dims_[2 * b + 3];
    const auto cout = shape_.channels[b];
    auto& a = cache.act[b];
    a.resize(cout * h * w);
    conv3x3_forward(cache.inputs[b].data(), cin, h, w, params_.data() + conv_[b].w, params_.data() + conv_[b].b, cout,
                    a.data());
    for (double& v : a) v = std::tanh(v);
    auto& p = cache.inputs[b + 1];
    p.assign(cout * ph * pw, 0.0);
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t y = 0; y < ph; ++y) {
        const double* r0 = a.data() + (o * h + 2 * y) * w;
        const double* r1 = r0 + w;
        for (std::size_t x = 0; x < pw; ++x) {
          p[(o * ph + y) * pw + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
        }
      }
    }
    cin = cout;
  }
  const auto area = dims_[2 * nb] * dims_[2 * nb + 1];
  const auto& last = cache.inputs[nb];
  cache.pooled.assign(cin, 0.0);
  for (std::size_t c = 0; c < cin; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < area; ++k) s += last[c * area + k];
    cache.pooled[c] = s / static_cast<double>(area);
  }
  cache.logits.assign(shape_.classes, 0.0);
  for (std::size_t k = 0; k < shape_.classes; ++k) {
    double s = params_[head_b_ + k];
    for (std::size_t c = 0; c < cin; ++c) s += params_[head_w_ + k * cin + c] * cache.pooled[c];
    cache.logits[k] = s;
  }
  require_finite(cache.logits, "encoder logits");
}

std::vector<double> ConvEncoder::features(std::span<const double> input) const {
  Cache c;
  forward(input, c);
  return c.pooled;
}

std::vector<double> ConvEncoder::logits(std::span<const double> input) const {
  Cache c;
  forward(input, c);
  return c.logits;
}

std::vector<double> ConvEncoder::probabilities(std::span<const double> input) const { return softmax(logits(input)); }

double ConvEncoder::loss_grad(std::span<const double> input, std::size_t target, std::span<double> grad,
                              double weight) const {
  if (target >= shape_.classes) throw Error(ErrorCode::ShapeMismatch, "target class out of range");
  Cache c;
  forward(input, c);
  const auto& z = c.logits;
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double loss = weight * (m + std::log(s) - z[target]);
  if (grad.empty()) return loss;
  if (grad.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size");

  const auto nb = shape_.channels.size();
  const auto cl = shape_.channels.back();
  std::vector<double> dz(shape_.classes);
  for (std::size_t k = 0; k < shape_.classes; ++k) dz[k] = weight * (std::exp(z[k] - m) / s - (k == target ? 1.0 : 0.0));
  std::vector<double> dpool(cl, 0.0);
  for (std::size_t k = 0; k < shape_.classes; ++k) {
    grad[head_b_ + k] += dz[k];
    for (std::size_t ch = 0; ch < cl; ++ch) {
      grad[head_w_ + k * cl + ch] += dz[k] * c.pooled[ch];
      dpool[ch] += dz[k] * params_[head_w_ + k * cl + ch];
    }
  }
  const auto area = dims_[2 * nb] * dims_[2 * nb + 1];
  std::vector<double> dnext(cl * area);
  for (std::size_t ch = 0; ch < cl; ++ch) {
    std::fill_n(dnext.begin() + static_cast<std::ptrdiff_t>(ch * area), area, dpool[ch] / static_cast<double>(area));
  }
  for (std::size_t bi = nb; bi-- > 0;) {
    const auto h = dims_[2 * bi], w = dims_[2 * bi + 1];
    const auto ph = dims_[2 * bi + 2], pw = dims_[2 * bi + 3];
    const auto cout = shape_.channels[bi];
    const auto cin = bi == 0 ? shape_.in_channels : shape_.channels[bi - 1];
    const auto& a = c.act[bi];
    std::vector<double> da(cout * h * w, 0.0);
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t x = 0; x < pw; ++x) {
          const double g = 0.25 * dnext[(o * ph + y) * pw + x];
          const std::size_t k0 = (o * h + 2 * y) * w + 2 * x;
          da[k0] = g;
          da[k0 + 1] = g;
          da[k0 + w] = g;
          da[k0 + w + 1] = g;
        }
      }
    }
    for (std::size_t k = 0; k < da.size(); ++k) da[k] *= 1.0 - a[k] * a[k];
    std::vector<double> din;
    if (bi > 0) din.assign(cin * h * w, 0.0);
    conv3x3_backward(c.inputs[bi].data(), cin, h, w, params_.data() + conv_[bi].w, cout, da.data(),
                     grad.data() + conv_[bi].w, grad.data() + conv_[bi].b, bi > 0 ? din.data() : nullptr);
    dnext = std::move(din);
  }
  return loss;
}

void ConvEncoder::write(ByteWriter& out) const {
  out.str("conv_encoder");
  out.u64(shape_.in_channels);
  out.u64(shape_.height);
  out.u64(shape_.width);
  out.u64(shape_.channels.size());
  for (auto c : shape_.channels) out.u64(c);
  out.u64(shape_.classes);
  out.u64(seed_);
  write_params(out, params_);
}

ConvEncoder ConvEncoder::read(ByteReader& in) {
  if (in.str() != "conv_encoder") throw Error(ErrorCode::MalformedFile, "not a conv encoder checkpoint");
  Shape s;
  s.in_channels = in.u64();
  s.height = in.u64();
  s.width = in.u64();
  const auto nb = in.u64();
  if (nb > 64) throw Error(ErrorCode::MalformedFile, "implausible encoder depth");
  s.channels.resize(nb);
  for (auto& c : s.channels) c = in.u64();
  s.classes = in.u64();
  ConvEncoder e;
  e.shape_ = s;
  e.seed_ = in.u64();
  e.build_layout();
  e.params_ = read_params(in, e.params_.size());
  return e;
}

// ---- RecurrentNet ----

RecurrentNet::RecurrentNet(Shape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  if (shape_.input == 0 || shape_.hidden == 0 || shape_.outputs == 0) {
    throw Error(ErrorCode::ShapeMismatch, "recurrent net dimensions must be positive");
  }
  const auto D = shape_.input, H = shape_.hidden, C = shape_.outputs;
  wx_ = 0;
  wh_ = wx_ + 4 * H * D;
  b_ = wh_ + 4 * H * H;
  wo_ = b_ + 4 * H;
  bo_ = wo_ + C * H;
  params_.assign(bo_ + C, 0.0);
  Rng rng(seed);
  const double a = 1.0 / std::sqrt(static_cast<double>(H));
  fill_uniform(params_, wx_, 4 * H * D, a, rng);
  fill_uniform(params_, wh_, 4 * H * H, a, rng);
  for (std::size_t k = 0; k < H; ++k) params_[b_ + H + k] = 1.0;  // forget gate
  fill_uniform(params_, wo_, C * H, a, rng);
}

void RecurrentNet::zero_head() { std::fill(params_.begin() + static_cast<std::ptrdiff_t>(wo_), params_.end(), 0.0); }

void RecurrentNet::check(const SequenceInput& x) const {
  if (x.steps == 0 || x.values.size() != x.steps * shape_.input) {
    throw Error(ErrorCode::ShapeMismatch, "sequence of " + std::to_string(x.values.size()) + " values does not match " +
                                              std::to_string(x.steps) + " steps x " + std::to_string(shape_.input));
  }
}

namespace {

struct LstmTape {
  std::vector<double> gates;  // steps x 4H, post-activation (i, f, g, o)
  std::vector<double> cell;   // (steps + 1) x H, row 0 = initial state
  std::vector<double> hidden;
  std::vector<double> mean;
  std::vector<double> logits;
};

}  // namespace

static void lstm_forward(const std::vector<double>& p, std::size_t D, std::size_t H, std::size_t C, double scale,
                         std::size_t wx, std::size_t wh, std::size_t b, std::size_t wo, std::size_t bo,
                         const SequenceInput& x, LstmTape& tape) {
  const auto T = x.steps;
  tape.gates.assign(T * 4 * H, 0.0);
  tape.cell.assign((T + 1) * H, 0.0);
  tape.hidden.assign((T + 1) * H, 0.0);
  tape.mean.assign(H, 0.0);
  std::vector<double> z(4 * H);
  for (std::size_t t = 0; t < T; ++t) {
    const double* xt = x.values.data() + t * D;
    const double* hp = tape.hidden.data() + t * H;
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = p[b + r];
      const double* wr = p.data() + wx + r * D;
      double sx = 0.0;
      for (std::size_t d = 0; d < D; ++d) sx += wr[d] * xt[d];
      s += scale * sx;
      const double* ur = p.data() + wh + r * H;
      for (std::size_t k = 0; k < H; ++k) s += ur[k] * hp[k];
      z[r] = s;
    }
    double* g = tape.gates.data() + t * 4 * H;
    const double* cp = tape.cell.data() + t * H;
    double* cn = tape.cell.data() + (t + 1) * H;
    double* hn = tape.hidden.data() + (t + 1) * H;
    for (std::size_t k = 0; k < H; ++k) {
      g[k] = sigmoid(z[k]);
      g[H + k] = sigmoid(z[H + k]);
      g[2 * H + k] = std::tanh(z[2 * H + k]);
      g[3 * H + k] = sigmoid(z[3 * H + k]);
      cn[k] = g[H + k] * cp[k] + g[k] * g[2 * H + k];
      hn[k] = g[3 * H + k] * std::tanh(cn[k]);
      tape.mean[k] += hn[k];
    }
  }
  for (double& v : tape.mean) v /= static_cast<double>(T);
  tape.logits.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double s = p[bo + c];
    for (std::size_t k = 0; k < H; ++k) s += p[wo + c * H + k] * tape.mean[k];
    tape.logits[c] = s;
  }
  require_finite(tape.cell, "recurrent cell state");
  require_finite(tape.logits, "recurrent logits");
}

std::vector<double> RecurrentNet::forward(const SequenceInput& x) const {
  check(x);
  LstmTape tape;
  lstm_forward(params_, shape_.input, shape_.hidden, shape_.outputs, shape_.input_scale, wx_, wh_, b_, wo_, bo_, x,
               tape);
  for (double& v : tape.logits) v = sigmoid(v);
  return tape.logits;
}

void RecurrentNet::trace(const SequenceInput& x, std::vector<double>& hidden, std::vector<double>& cell) const {
  check(x);
  LstmTape tape;
  lstm_forward(params_, shape_.input, shape_.hidden, shape_.outputs, shape_.input_scale, wx_, wh_, b_, wo_, bo_, x,
               tape);
  hidden.assign(tape.hidden.begin() + static_cast<std::ptrdiff_t>(shape_.hidden), tape.hidden.end());
  cell.assign(tape.cell.begin() + static_cast<std::ptrdiff_t>(shape_.hidden), tape.cell.end());
}

double RecurrentNet::loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                               double weight) const {
  check(x);
  const auto D = shape_.input, H = shape_.hidden, C = shape_.outputs, T = x.steps;
  if (target.size() != C) throw Error(ErrorCode::ShapeMismatch, "target width does not match the head");
  LstmTape tape;
  lstm_forward(params_, D, H, C, shape_.input_scale, wx_, wh_, b_, wo_, bo_, x, tape);
  const double loss = weight * bce_with_logits(tape.logits, target);
  if (grad.empty()) return loss;
  if (grad.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size");

  std::vector<double> dmean(H, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double dl = weight * (sigmoid(tape.logits[c]) - target[c]) / static_cast<double>(C);
    grad[bo_ + c] += dl;
    for (std::size_t k = 0; k < H; ++k) {
      grad[wo_ + c * H + k] += dl * tape.mean[k];
      dmean[k] += dl * params_[wo_ + c * H + k];
    }
  }
  for (double& v : dmean) v /= static_cast<double>(T);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(4 * H);
  const double scale = shape_.input_scale;
  for (std::size_t t = T; t-- > 0;) {
    const double* g = tape.gates.data() + t * 4 * H;
    const double* cp = tape.cell.data() + t * H;
    const double* cn = tape.cell.data() + (t + 1) * H;
    const double* hp = tape.hidden.data() + t * H;
    const double* xt = x.values.data() + t * D;
    for (std::size_t k = 0; k < H; ++k) {
      const double dh = dmean[k] + dh_next[k];
      const double tc = std::tanh(cn[k]);
      const double i = g[k], f = g[H + k], gg = g[2 * H + k], o = g[3 * H + k];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      dz[k] = dc * gg * i * (1.0 - i);
      dz[H + k] = dc * cp[k] * f * (1.0 - f);
      dz[2 * H + k] = dc * i * (1.0 - gg * gg);
      dz[3 * H + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double d = dz[r];
      grad[b_ + r] += d;
      double* gw = grad.data() + wx_ + r * D;
      for (std::size_t j = 0; j < D; ++j) gw[j] += d * scale * xt[j];
      double* gu = grad.data() + wh_ + r * H;
      const double* ur = params_.data() + wh_ + r * H;
      for (std::size_t k = 0; k < H; ++k) {
        gu[k] += d * hp[k];
        dh_next[k] += d * ur[k];
      }
    }
  }
  return loss;
}

void RecurrentNet::write(ByteWriter& out) const {
  out.str("recurrent");
  out.u64(shape_.input);
  out.u64(shape_.hidden);
  out.u64(shape_.outputs);
  out.f64(shape_.input_scale);
  out.u64(seed_);
  write_params(out, params_);
}

RecurrentNet RecurrentNet::read(ByteReader& in) {
  if (in.str() != "recurrent") throw Error(ErrorCode::MalformedFile, "not a recurrent checkpoint");
  Shape s;
  s.input = in.u64();
  s.hidden = in.u64();
  s.outputs = in.u64();
  s.input_scale = in.f64();
  const auto seed = in.u64();
  if (s.input > (1u << 20) || s.hidden > (1u << 16) || s.outputs > (1u << 16)) {
    throw Error(ErrorCode::MalformedFile, "implausible recurrent shape");
  }
  RecurrentNet n(s, seed);
  n.params_ = read_params(in, n.params_.size());
  return n;
}

// ---- Conv1DNet ----

Conv1DNet::Conv1DNet(Shape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  if (shape_.input == 0 || shape_.channels == 0 || shape_.outputs == 0) {
    throw Error(ErrorCode::ShapeMismatch, "conv1d net dimensions must be positive");
  }
  const auto D = shape_.input, K = shape_.channels, C = shape_.outputs;
  w_ = 0;
  b_ = K * D * 3;
  wo_ = b_ + K;
  bo_ = wo_ + C * K;
  params_.assign(bo_ + C, 0.0);
  Rng rng(seed);
  fill_uniform(params_, w_, K * D * 3, 1.0 / std::sqrt(static_cast<double>(3 * D)), rng);
  fill_uniform(params_, wo_, C * K, 1.0 / std::sqrt(static_cast<double>(K)), rng);
}

void Conv1DNet::zero_head() { std::fill(params_.begin() + static_cast<std::ptrdiff_t>(wo_), params_.end(), 0.0); }

void Conv1DNet::check(const SequenceInput& x) const {
  if (x.steps == 0 || x.values.size() != x.steps * shape_.input) {
    throw Error(ErrorCode::ShapeMismatch, "sequence shape does not match the conv1d input width");
  }
}

namespace {

struct Conv1DTape {
  std::vector<double> act;  // steps x K
  std::vector<std::size_t> argmax;
  std::vector<double> pooled;
  std::vector<double> logits;
};

void conv1d_forward(const std::vector<double>& p, const Conv1DNet::Shape& s, std::size_t w, std::size_t b,
                    std::size_t wo, std::size_t bo, const SequenceInput& x, Conv1DTape& tape) {
  const auto D = s.input, K = s.channels, C = s.outputs, T = x.steps;
  tape.act.assign(T * K, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < K; ++o) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        if ((t == 0 && k == 0) || t + k > T) continue;
        const double* xr = x.values.data() + (t + k - 1) * D;
        for (std::size_t i = 0; i < D; ++i) acc += p[w + (o * D + i) * 3 + k] * xr[i];
      }
      tape.act[t * K + o] = std::tanh(p[b + o] + s.input_scale * acc);
    }
  }
  tape.pooled.assign(K, 0.0);
  tape.argmax.assign(K, 0);
  for (std::size_t o = 0; o < K; ++o) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < T; ++t) {
      if (tape.act[t * K + o] > tape.act[best * K + o]) best = t;
    }
    tape.argmax[o] = best;
    tape.pooled[o] = tape.act[best * K + o];
  }
  tape.logits.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double v = p[bo + c];
    for (std::size_t o = 0; o < K; ++o) v += p[wo + c * K + o] * tape.pooled[o];
    tape.logits[c] = v;
  }
  require_finite(tape.logits, "conv1d logits");
}

}  // namespace

std::vector<double> Conv1DNet::forward(const SequenceInput& x) const {
  check(x);
  Conv1DTape tape;
  conv1d_forward(params_, shape_, w_, b_, wo_, bo_, x, tape);
  for (double& v : tape.logits) v = sigmoid(v);
  return tape.logits;
}

double Conv1DNet::loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                            double weight) const {
  check(x);
  const auto D = shape_.input, K = shape_.channels, C = shape_.outputs, T = x.steps;
  if (target.size() != C) throw Error(ErrorCode::ShapeMismatch, "target width does not match the head");
  Conv1DTape tape;
  conv1d_forward(params_, shape_, w_, b_, wo_, bo_, x, tape);
  const double loss = weight * bce_with_logits(tape.logits, target);
  if (grad.empty()) return loss;
  if (grad.size() != params_.size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size");
  std::vector<double> dpool(K, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double dl = weight * (sigmoid(tape.logits[c]) - target[c]) / static_cast<double>(C);
    grad[bo_ + c] += dl;
    for (std::size_t o = 0; o < K; ++o) {
      grad[wo_ + c * K + o] += dl * tape.pooled[o];
      dpool[o] += dl * params_[wo_ + c * K + o];
    }
  }
  for (std::size_t o = 0; o < K; ++o) {
    const auto t = tape.argmax[o];
    const double a = tape.act[t * K + o];
    const double dz = dpool[o] * (1.0 - a * a);
    grad[b_ + o] += dz;
    for (std::size_t k = 0; k < 3; ++k) {
      if ((t == 0 && k == 0) || t + k > T) continue;
      const double* xr = x.values.data() + (t + k - 1) * D;
      for (std::size_t i = 0; i < D; ++i) grad[w_ + (o * D + i) * 3 + k] += dz * shape_.input_scale * xr[i];
    }
  }
  return loss;
}

void Conv1DNet::write(ByteWriter& out) const {
  out.str("conv1d");
  out.u64(shape_.input);
  out.u64(shape_.channels);
  out.u64(shape_.outputs);
  out.f64(shape_.input_scale);
  out.u64(seed_);
  write_params(out, params_);
}

Conv1DNet Conv1DNet::read(ByteReader& in) {
  if (in.str() != "conv1d") throw Error(ErrorCode::MalformedFile, "not a conv1d checkpoint");
  Shape s;
  s.input = in.u64();
  s.channels = in.u64();
  s.outputs = in.u64();
  s.input_scale = in.f64();
  const auto seed = in.u64();
  if (s.input > (1u << 20) || s.channels > (1u << 16) || s.outputs > (1u << 16)) {
    throw Error(ErrorCode::MalformedFile, "implausible conv1d shape");
  }
  Conv1DNet n(s, seed);
  n.params_ = read_params(in, n.params_.size());
  return n;
}

}  // namespace posemo
