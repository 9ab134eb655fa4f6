#ifndef CLINLP_NN_HPP
#define CLINLP_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstring>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinlp/tensor.hpp"

namespace clinlp::nn {

using Rng = std::mt19937_64;

inline void glorot_uniform(Rng& rng, Tensor& t, size_t fan_in, size_t fan_out) {
  double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : t.data) x = dist(rng);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Dense: y = W x + b
// ---------------------------------------------------------------------------

struct Dense {
  Parameter W;  // [out x in]
  Parameter b;  // [out]

  Dense() = default;
  Dense(const std::string& name, size_t out, size_t in, Rng& rng)
      : W(name + ".W", {out, in}), b(name + ".b", {out}) {
    glorot_uniform(rng, W.value, in, out);
  }

  size_t in_dim() const { return W.value.cols(); }
  size_t out_dim() const { return W.value.rows(); }

  std::vector<double> forward(const std::vector<double>& x) const {
    if (x.size() != in_dim()) throw std::runtime_error("dense: input dim mismatch");
    std::vector<double> y(out_dim());
    for (size_t i = 0; i < out_dim(); ++i) {
      const double* w = W.value.row(i);
      double s = b.value.data[i];
      for (size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  // Accumulates parameter grads, returns dx.
  std::vector<double> backward(const std::vector<double>& x,
                               const std::vector<double>& dy) {
    std::vector<double> dx(in_dim(), 0.0);
    for (size_t i = 0; i < out_dim(); ++i) {
      double g = dy[i];
      b.grad.data[i] += g;
      double* wg = W.grad.row(i);
      const double* w = W.value.row(i);
      for (size_t j = 0; j < x.size(); ++j) {
        wg[j] += g * x[j];
        dx[j] += g * w[j];
      }
    }
    return dx;
  }

  std::vector<Parameter*> params() { return {&W, &b}; }
};

// ---------------------------------------------------------------------------
// Embedding table with a reserved OOV row at index 0.
// ---------------------------------------------------------------------------

struct EmbeddingTable {
  Parameter table;  // [vocab x dim]

  EmbeddingTable() = default;
  EmbeddingTable(const std::string& name, size_t vocab, size_t dim, Rng& rng)
      : table(name, {vocab, dim}) {
    glorot_uniform(rng, table.value, dim, dim);
  }

  size_t dim() const { return table.value.cols(); }

  std::vector<double> forward(size_t index) const {
    const double* r = table.value.row(index);
    return std::vector<double>(r, r + dim());
  }
  void backward(size_t index, const std::vector<double>& dvec) {
    double* g = table.grad.row(index);
    for (size_t j = 0; j < dvec.size(); ++j) g[j] += dvec[j];
  }
  std::vector<Parameter*> params() { return {&table}; }
};

// ---------------------------------------------------------------------------
// Character convolution + max-over-time pooling, bias-free, same padding.
// ---------------------------------------------------------------------------

struct CharConvCache {
  std::vector<std::vector<double>> input;  // L x d
  std::vector<size_t> argmax;              // per filter: winning position
};

struct CharConv {
  Parameter filters;  // [k x (w*d)]
  size_t window = 3;
  size_t char_dim = 0;

  CharConv() = default;
  CharConv(const std::string& name, size_t k, size_t w, size_t d, Rng& rng)
      : filters(name, {k, w * d}), window(w), char_dim(d) {
    glorot_uniform(rng, filters.value, w * d, k);
  }

  size_t n_filters() const { return filters.value.rows(); }

  std::vector<double> forward(const std::vector<std::vector<double>>& chars,
                              CharConvCache* cache = nullptr) const {
    if (chars.empty()) throw std::runtime_error("char conv: empty input");
    for (auto& c : chars)
      if (c.size() != char_dim) throw std::runtime_error("char conv: dim mismatch");
    size_t L = chars.size();
    size_t pad = (window - 1) / 2;
    std::vector<double> pooled(n_filters(),
                               -std::numeric_limits<double>::infinity());
    std::vector<size_t> argmax(n_filters(), 0);
    for (size_t t = 0; t < L; ++t) {
      for (size_t f = 0; f < n_filters(); ++f) {
        const double* w = filters.value.row(f);
        double s = 0.0;
        for (size_t u = 0; u < window; ++u) {
          long src = long(t) + long(u) - long(pad);
          if (src < 0 || src >= long(L)) continue;
          const double* x = chars[src].data();
          const double* wu = w + u * char_dim;
          for (size_t j = 0; j < char_dim; ++j) s += wu[j] * x[j];
        }
        if (s > pooled[f]) {
          pooled[f] = s;
          argmax[f] = t;
        }
      }
    }
    if (cache) {
      cache->input = chars;
      cache->argmax = argmax;
    }
    return pooled;
  }

  // Returns d(input); routes gradient through the pooled positions only.
  std::vector<std::vector<double>> backward(const CharConvCache& cache,
                                            const std::vector<double>& dpooled) {
    size_t L = cache.input.size();
    size_t pad = (window - 1) / 2;
    std::vector<std::vector<double>> dx(L, std::vector<double>(char_dim, 0.0));
    for (size_t f = 0; f < n_filters(); ++f) {
      double g = dpooled[f];
      size_t t = cache.argmax[f];
      double* wg = filters.grad.row(f);
      const double* w = filters.value.row(f);
      for (size_t u = 0; u < window; ++u) {
        long src = long(t) + long(u) - long(pad);
        if (src < 0 || src >= long(L)) continue;
        for (size_t j = 0; j < char_dim; ++j) {
          wg[u * char_dim + j] += g * cache.input[src][j];
          dx[src][j] += g * w[u * char_dim + j];
        }
      }
    }
    return dx;
  }

  std::vector<Parameter*> params() { return {&filters}; }
};

// ---------------------------------------------------------------------------
// LSTM (gate order i, f, g, o) and BiLSTM.
// ---------------------------------------------------------------------------

struct LstmCache {
  std::vector<std::vector<double>> x;      // T x d
  std::vector<std::vector<double>> gates;  // T x 4h (post-activation)
  std::vector<std::vector<double>> c;      // T x h
  std::vector<std::vector<double>> h;      // T x h
};

struct Lstm {
  Parameter W;  // [4h x (d+h)]
  Parameter b;  // [4h]
  size_t hidden = 0;
  size_t input_dim = 0;

  Lstm() = default;
  Lstm(const std::string& name, size_t h, size_t d, Rng& rng)
      : W(name + ".W", {4 * h, d + h}), b(name + ".b", {4 * h}),
        hidden(h), input_dim(d) {
    glorot_uniform(rng, W.value, d + h, h);
    // forget gate bias +1
    for (size_t j = h; j < 2 * h; ++j) b.value.data[j] = 1.0;
  }

  // Runs the sequence left to right; caller reverses for the backward pass.
  std::vector<std::vector<double>> forward(
      const std::vector<std::vector<double>>& xs, LstmCache* cache) const {
    size_t T = xs.size();
    size_t h = hidden;
    std::vector<double> hp(h, 0.0), cp(h, 0.0);
    std::vector<std::vector<double>> hs(T);
    if (cache) {
      cache->x = xs;
      cache->gates.assign(T, {});
      cache->c.assign(T, {});
      cache->h.assign(T, {});
    }
    for (size_t t = 0; t < T; ++t) {
      if (xs[t].size() != input_dim)
        throw std::runtime_error("lstm: input dim mismatch");
      std::vector<double> z(4 * h);
      for (size_t i = 0; i < 4 * h; ++i) {
        const double* w = W.value.row(i);
        double s = b.value.data[i];
        for (size_t j = 0; j < input_dim; ++j) s += w[j] * xs[t][j];
        for (size_t j = 0; j < h; ++j) s += w[input_dim + j] * hp[j];
        z[i] = s;
      }
      std::vector<double> g(4 * h), cnew(h), hnew(h);
      for (size_t j = 0; j < h; ++j) {
        double gi = sigmoid(z[j]);
        double gf = sigmoid(z[h + j]);
        double gg = std::tanh(z[2 * h + j]);
        double go = sigmoid(z[3 * h + j]);
        g[j] = gi; g[h + j] = gf; g[2 * h + j] = gg; g[3 * h + j] = go;
        cnew[j] = gf * cp[j] + gi * gg;
        hnew[j] = go * std::tanh(cnew[j]);
      }
      if (cache) {
        cache->gates[t] = g;
        cache->c[t] = cnew;
        cache->h[t] = hnew;
      }
      hs[t] = hnew;
      hp = std::move(hnew);
      cp = std::move(cnew);
    }
    return hs;
  }

  // dhs: gradient w.r.t. each output h_t. Returns gradient w.r.t. inputs.
  std::vector<std::vector<double>> backward(
      const LstmCache& cache, const std::vector<std::vector<double>>& dhs) {
    size_t T = cache.x.size();
    size_t h = hidden;
    std::vector<std::vector<double>> dxs(T, std::vector<double>(input_dim, 0.0));
    std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
    for (size_t ti = T; ti-- > 0;) {
      const auto& g = cache.gates[ti];
      const auto& c = cache.c[ti];
      const std::vector<double>* cprev = ti > 0 ? &cache.c[ti - 1] : nullptr;
      const std::vector<double>* hprev = ti > 0 ? &cache.h[ti - 1] : nullptr;
      std::vector<double> dz(4 * h);
      std::vector<double> dc(h);
      for (size_t j = 0; j < h; ++j) {
        double dh = dhs[ti][j] + dh_next[j];
        double tc = std::tanh(c[j]);
        dc[j] = dh * g[3 * h + j] * (1.0 - tc * tc) + dc_next[j];
        double go = g[3 * h + j];
        dz[3 * h + j] = dh * tc * go * (1.0 - go);
        double gi = g[j], gf = g[h + j], gg = g[2 * h + j];
        dz[j] = dc[j] * gg * gi * (1.0 - gi);
        double cp = cprev ? (*cprev)[j] : 0.0;
        dz[h + j] = dc[j] * cp * gf * (1.0 - gf);
        dz[2 * h + j] = dc[j] * gi * (1.0 - gg * gg);
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      for (size_t j = 0; j < h; ++j) dc_next[j] = dc[j] * g[h + j];
      for (size_t i = 0; i < 4 * h; ++i) {
        double gz = dz[i];
        if (gz == 0.0) continue;
        b.grad.data[i] += gz;
        double* wg = W.grad.row(i);
        const double* w = W.value.row(i);
        for (size_t j = 0; j < input_dim; ++j) {
          wg[j] += gz * cache.x[ti][j];
          dxs[ti][j] += gz * w[j];
        }
        for (size_t j = 0; j < h; ++j) {
          wg[input_dim + j] += gz * (hprev ? (*hprev)[j] : 0.0);
          dh_next[j] += gz * w[input_dim + j];
        }
      }
    }
    return dxs;
  }

  std::vector<Parameter*> params() { return {&W, &b}; }
};

struct BiLstmCache {
  LstmCache fwd, bwd;
};

// Forward and backward passes concatenated per position: output T x 2h.
struct BiLstm {
  Lstm fwd, bwd;

  BiLstm() = default;
  BiLstm(const std::string& name, size_t h, size_t d, Rng& rng)
      : fwd(name + ".fwd", h, d, rng), bwd(name + ".bwd", h, d, rng) {}

  size_t hidden() const { return fwd.hidden; }

  std::vector<std::vector<double>> forward(
      const std::vector<std::vector<double>>& xs, BiLstmCache* cache) const {
    size_t T = xs.size();
    auto hf = fwd.forward(xs, cache ? &cache->fwd : nullptr);
    std::vector<std::vector<double>> rev(xs.rbegin(), xs.rend());
    auto hb = bwd.forward(rev, cache ? &cache->bwd : nullptr);
    std::vector<std::vector<double>> out(T);
    size_t h = hidden();
    for (size_t t = 0; t < T; ++t) {
      out[t].resize(2 * h);
      std::copy(hf[t].begin(), hf[t].end(), out[t].begin());
      std::copy(hb[T - 1 - t].begin(), hb[T - 1 - t].end(), out[t].begin() + h);
    }
    return out;
  }

  std::vector<std::vector<double>> backward(
      const BiLstmCache& cache, const std::vector<std::vector<double>>& dout) {
    size_t T = dout.size();
    size_t h = hidden();
    std::vector<std::vector<double>> dhf(T), dhb(T);
    for (size_t t = 0; t < T; ++t) {
      dhf[t].assign(dout[t].begin(), dout[t].begin() + h);
      dhb[T - 1 - t].assign(dout[t].begin() + h, dout[t].end());
    }
    auto dxf = fwd.backward(cache.fwd, dhf);
    auto dxb = bwd.backward(cache.bwd, dhb);
    std::vector<std::vector<double>> dx(T);
    for (size_t t = 0; t < T; ++t) {
      dx[t] = dxf[t];
      for (size_t j = 0; j < dx[t].size(); ++j) dx[t][j] += dxb[T - 1 - t][j];
    }
    return dx;
  }

  std::vector<Parameter*> params() {
    auto p = fwd.params();
    auto q = bwd.params();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
};

// ---------------------------------------------------------------------------
// Inverted dropout: identity at inference, scales survivors by 1/(1-p).
// ---------------------------------------------------------------------------

inline std::vector<double> dropout_mask(Rng& rng, size_t n, double p) {
  std::vector<double> mask(n, 1.0);
  if (p <= 0.0) return mask;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = (u(rng) < p) ? 0.0 : scale;
  return mask;
}

// ---------------------------------------------------------------------------
// Masked softmax cross-entropy: mean over masked-in rows.
// ---------------------------------------------------------------------------

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

struct SoftmaxXentResult {
  double loss = 0.0;
  Tensor dlogits;  // [T x C]
};

inline SoftmaxXentResult softmax_xent(const Tensor& logits,
                                      const std::vector<size_t>& targets,
                                      const std::vector<bool>& mask) {
  size_t T = logits.rows(), C = logits.cols();
  if (targets.size() != T || mask.size() != T)
    throw std::runtime_error("softmax_xent: length mismatch");
  size_t active = 0;
  for (bool m : mask) active += m ? 1 : 0;
  if (active == 0) throw std::runtime_error("no active positions");
  SoftmaxXentResult res;
  res.dlogits = Tensor({T, C});
  for (size_t t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    if (targets[t] >= C) throw std::runtime_error("softmax_xent: target out of range");
    std::vector<double> row(logits.row(t), logits.row(t) + C);
    auto p = softmax(row);
    res.loss += -std::log(std::max(p[targets[t]], 1e-300));
    for (size_t c = 0; c < C; ++c)
      res.dlogits.at(t, c) = (p[c] - (c == targets[t] ? 1.0 : 0.0)) / double(active);
  }
  res.loss /= double(active);
  return res;
}

// ---------------------------------------------------------------------------
// Adam with bias correction and epoch-based learning rate decay:
// lr_e = base_lr / (1 + decay_po * epoch)
// ---------------------------------------------------------------------------

struct AdamState {
  double base_lr = 0.001;
  double decay_po = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // name -> (m, v)

  double effective_lr(long epoch) const {
    return base_lr / (1.0 + decay_po * double(epoch));
  }
};

inline void adam_step(std::vector<Parameter*>& params, AdamState& state,
                      long epoch) {
  double lr = state.effective_lr(epoch);
  ++state.step_count;
  double t = double(state.step_count);
  double bc1 = 1.0 - std::pow(state.beta1, t);
  double bc2 = 1.0 - std::pow(state.beta2, t);
  for (Parameter* p : params) {
    for (double g : p->grad.data)
      if (!std::isfinite(g))
        throw std::runtime_error("non-finite gradient in parameter " + p->name);
    auto it = state.moments.find(p->name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(p->name, std::make_pair(Tensor(p->value.shape),
                                                Tensor(p->value.shape)))
               .first;
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    for (size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

inline void zero_grads(std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad.zero();
}

// ---------------------------------------------------------------------------
// Central finite-difference gradient verification.
// Caller populates analytic grads first, then passes a pure loss function.
// ---------------------------------------------------------------------------

struct GradCheckReport {
  std::map<std::string, double> max_rel_err;
  double worst = 0.0;
  bool within(double tol) const { return worst <= tol; }
};

inline GradCheckReport grad_check(const std::function<double()>& loss_fn,
                                  std::vector<Parameter*> params,
                                  double step = 1e-5) {
  GradCheckReport report;
  for (Parameter* p : params) {
    double worst = 0.0;
    for (size_t i = 0; i < p->value.size(); ++i) {
      double orig = p->value.data[i];
      p->value.data[i] = orig + step;
      double lp = loss_fn();
      p->value.data[i] = orig - step;
      double lm = loss_fn();
      p->value.data[i] = orig;
      double fd = (lp - lm) / (2.0 * step);
      double an = p->grad.data[i];
      double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1.0});
      worst = std::max(worst, rel);
    }
    report.max_rel_err[p->name] = worst;
    report.worst = std::max(report.worst, worst);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Binary parameter serialization.
// Header: magic "CLNP", u32 version, u64 count.
// Per parameter: u32 name length, name, u32 rank, u64 dims, f64 LE values.
// ---------------------------------------------------------------------------

inline constexpr char kParamMagic[4] = {'C', 'L', 'N', 'P'};
inline constexpr uint32_t kParamVersion = 1;

namespace detail {
template <typename T>
void write_raw(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("unexpected end of model file");
  return v;
}
}  // namespace detail

inline void save_params(std::ostream& os,
                        const std::vector<const Parameter*>& params) {
  os.write(kParamMagic, 4);
  detail::write_raw<uint32_t>(os, kParamVersion);
  detail::write_raw<uint64_t>(os, params.size());
  for (const Parameter* p : params) {
    detail::write_raw<uint32_t>(os, uint32_t(p->name.size()));
    os.write(p->name.data(), std::streamsize(p->name.size()));
    detail::write_raw<uint32_t>(os, uint32_t(p->value.shape.size()));
    for (size_t d : p->value.shape) detail::write_raw<uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(p->value.data.data()),
             std::streamsize(p->value.size() * sizeof(double)));
  }
}

inline std::vector<Parameter> load_params(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kParamMagic, 4) != 0)
    throw std::runtime_error("not a model file");
  uint32_t version = detail::read_raw<uint32_t>(is);
  if (version != kParamVersion)
    throw std::runtime_error("unsupported model file version");
  uint64_t count = detail::read_raw<uint64_t>(is);
  std::vector<Parameter> params;
  params.reserve(count);
  for (uint64_t k = 0; k < count; ++k) {
    uint32_t nlen = detail::read_raw<uint32_t>(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    if (!is) throw std::runtime_error("unexpected end of model file");
    uint32_t rank = detail::read_raw<uint32_t>(is);
    std::vector<size_t> shape(rank);
    for (auto& d : shape) d = size_t(detail::read_raw<uint64_t>(is));
    Parameter p(name, shape);
    is.read(reinterpret_cast<char*>(p.value.data.data()),
            std::streamsize(p.value.size() * sizeof(double)));
    if (!is) throw std::runtime_error("unexpected end of model file");
    params.push_back(std::move(p));
  }
  return params;
}

// Copies loaded tensors into live parameters by name.
inline void restore_params(std::vector<Parameter*> dst,
                           const std::vector<Parameter>& loaded) {
  std::map<std::string, const Parameter*> byname;
  for (auto& p : loaded) byname[p.name] = &p;
  for (Parameter* p : dst) {
    auto it = byname.find(p->name);
    if (it == byname.end())
      throw std::runtime_error("model file missing parameter " + p->name);
    if (it->second->value.shape != p->value.shape)
      throw std::runtime_error("model file shape mismatch for " + p->name);
    p->value = it->second->value;
  }
}

}  // namespace clinlp::nn

#endif  // CLINLP_NN_HPP
