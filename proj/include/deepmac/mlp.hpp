#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepmac/rng.hpp"

namespace deepmac {

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts are unsupported");

// Fully connected network: ReLU on hidden layers, identity on the output.
// Plain double precision throughout; updates are applied by sgd_step.
class Mlp {
 public:
  struct Grads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
  };

  // One supervised sample: the target value for one output unit.
  struct Sample {
    std::vector<double> input;
    int output_index = 0;
    double target = 0.0;
  };

  Mlp() = default;

  // dims = {input, hidden..., output}; He-initialized from the rng.
  Mlp(std::vector<int> dims, Rng& rng) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("network needs input and output layers");
    for (int d : dims_)
      if (d <= 0) throw std::invalid_argument("layer widths must be positive");
    w_.resize(layers());
    b_.resize(layers());
    for (std::size_t l = 0; l < layers(); ++l) {
      const int fan_in = dims_[l];
      const int fan_out = dims_[l + 1];
      const double scale = std::sqrt(2.0 / fan_in);
      w_[l].resize(static_cast<std::size_t>(fan_in) * fan_out);
      for (double& v : w_[l]) v = scale * rng.normal();
      b_[l].assign(static_cast<std::size_t>(fan_out), 0.0);
    }
  }

  std::size_t layers() const { return dims_.empty() ? 0 : dims_.size() - 1; }
  int input_width() const { return dims_.front(); }
  int output_width() const { return dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }

  friend bool operator==(const Mlp&, const Mlp&) = default;

  std::vector<double> forward(std::span<const double> input) const {
    std::vector<std::vector<double>> acts;
    return forward_cached(input, acts);
  }

  // Mean squared error over the batch on the selected output units, plus
  // the full parameter gradient.
  double loss_and_grad(const std::vector<Sample>& batch, Grads& grads) const {
    if (batch.empty()) throw std::invalid_argument("empty training batch");
    grads.w.assign(w_.size(), {});
    grads.b.assign(b_.size(), {});
    for (std::size_t l = 0; l < layers(); ++l) {
      grads.w[l].assign(w_[l].size(), 0.0);
      grads.b[l].assign(b_[l].size(), 0.0);
    }
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<std::vector<double>> acts;
    for (const Sample& s : batch) {
      if (s.output_index < 0 || s.output_index >= output_width())
        throw std::out_of_range("sample output index outside the output layer");
      const std::vector<double> out = forward_cached(s.input, acts);
      const double err = out[static_cast<std::size_t>(s.output_index)] - s.target;
      loss += err * err * inv_n;

      // backward: delta on the output layer is nonzero only at the chosen unit
      std::vector<double> delta(static_cast<std::size_t>(output_width()), 0.0);
      delta[static_cast<std::size_t>(s.output_index)] = 2.0 * err * inv_n;
      for (std::size_t l = layers(); l-- > 0;) {
        const int in_w = dims_[l];
        const int out_w = dims_[l + 1];
        const std::vector<double>& a_in = acts[l];
        for (int o = 0; o < out_w; ++o) {
          const double d = delta[static_cast<std::size_t>(o)];
          if (d == 0.0) continue;
          grads.b[l][static_cast<std::size_t>(o)] += d;
          double* gw = grads.w[l].data() + static_cast<std::size_t>(o) * in_w;
          const double* ai = a_in.data();
          for (int i = 0; i < in_w; ++i) gw[i] += d * ai[i];
        }
        if (l == 0) break;
        std::vector<double> prev(static_cast<std::size_t>(in_w), 0.0);
        for (int o = 0; o < out_w; ++o) {
          const double d = delta[static_cast<std::size_t>(o)];
          if (d == 0.0) continue;
          const double* wrow = w_[l].data() + static_cast<std::size_t>(o) * in_w;
          for (int i = 0; i < in_w; ++i) prev[static_cast<std::size_t>(i)] += d * wrow[i];
        }
        // ReLU derivative of the layer-l activation
        for (int i = 0; i < in_w; ++i)
          if (acts[l][static_cast<std::size_t>(i)] <= 0.0) prev[static_cast<std::size_t>(i)] = 0.0;
        delta = std::move(prev);
      }
    }
    return loss;
  }

  // One gradient step with global-norm clipping (clip_norm <= 0 disables).
  void sgd_step(const Grads& grads, double lr, double clip_norm) {
    double sq = 0.0;
    for (const auto& g : grads.w)
      for (double v : g) sq += v * v;
    for (const auto& g : grads.b)
      for (double v : g) sq += v * v;
    double scale = lr;
    if (clip_norm > 0.0) {
      const double norm = std::sqrt(sq);
      if (norm > clip_norm) scale = lr * clip_norm / norm;
    }
    for (std::size_t l = 0; l < layers(); ++l) {
      for (std::size_t i = 0; i < w_[l].size(); ++i) w_[l][i] -= scale * grads.w[l][i];
      for (std::size_t i = 0; i < b_[l].size(); ++i) b_[l][i] -= scale * grads.b[l][i];
    }
  }

  void fill(double value) {
    for (auto& layer : w_)
      for (double& v : layer) v = value;
    for (auto& layer : b_)
      for (double& v : layer) v = value;
  }

  // Active flags of every hidden unit for one input. Gradient checks use
  // this to recognize probes whose finite-difference stencil straddles a
  // ReLU kink (where the difference quotient is not the derivative).
  std::vector<std::uint8_t> hidden_active(std::span<const double> input) const {
    std::vector<std::uint8_t> flags;
    std::vector<double> cur(input.begin(), input.end());
    for (std::size_t l = 0; l + 1 < layers(); ++l) {
      const int in_w = dims_[l];
      const int out_w = dims_[l + 1];
      std::vector<double> next(static_cast<std::size_t>(out_w));
      for (int o = 0; o < out_w; ++o) {
        const double* wrow = w_[l].data() + static_cast<std::size_t>(o) * in_w;
        double acc = b_[l][static_cast<std::size_t>(o)];
        for (int i = 0; i < in_w; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
        flags.push_back(acc > 0.0 ? 1 : 0);
        next[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
      }
      cur = std::move(next);
    }
    return flags;
  }

  // Flat parameter view (per layer: weights then biases); lets optimizers
  // and gradient checks walk every parameter uniformly.
  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers(); ++l) n += w_[l].size() + b_[l].size();
    return n;
  }

  double param(std::size_t i) const { return *locate(const_cast<Mlp&>(*this), i); }
  void set_param(std::size_t i, double v) { *locate(*this, i) = v; }

  static double grad_param(const Grads& g, std::size_t i) {
    for (std::size_t l = 0; l < g.w.size(); ++l) {
      if (i < g.w[l].size()) return g.w[l][i];
      i -= g.w[l].size();
      if (i < g.b[l].size()) return g.b[l][i];
      i -= g.b[l].size();
    }
    throw std::out_of_range("parameter index outside the network");
  }

  // ---- flat little-endian weight file with a versioned header ----
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open weight file for writing: " + path);
    out.write(kMagic, 4);
    write_u32(out, kFormatVersion);
    write_u32(out, static_cast<std::uint32_t>(dims_.size()));
    for (int d : dims_) write_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t l = 0; l < layers(); ++l) {
      out.write(reinterpret_cast<const char*>(w_[l].data()),
                static_cast<std::streamsize>(w_[l].size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(b_[l].data()),
                static_cast<std::streamsize>(b_[l].size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing weight file: " + path);
  }

  static Mlp load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != kMagic)
      throw std::runtime_error("not a weight file: " + path);
    if (read_u32(in) != kFormatVersion) throw std::runtime_error("unsupported weight file version");
    const std::uint32_t ndims = read_u32(in);
    if (ndims < 2 || ndims > 64) throw std::runtime_error("corrupt weight file header");
    Mlp net;
    net.dims_.resize(ndims);
    for (auto& d : net.dims_) d = static_cast<int>(read_u32(in));
    net.w_.resize(net.layers());
    net.b_.resize(net.layers());
    for (std::size_t l = 0; l < net.layers(); ++l) {
      net.w_[l].resize(static_cast<std::size_t>(net.dims_[l]) * net.dims_[l + 1]);
      net.b_[l].resize(static_cast<std::size_t>(net.dims_[l + 1]));
      in.read(reinterpret_cast<char*>(net.w_[l].data()),
              static_cast<std::streamsize>(net.w_[l].size() * sizeof(double)));
      in.read(reinterpret_cast<char*>(net.b_[l].data()),
              static_cast<std::streamsize>(net.b_[l].size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("truncated weight file: " + path);
    return net;
  }

 private:
  static constexpr const char* kMagic = "DMW1";
  static constexpr std::uint32_t kFormatVersion = 1;

  static double* locate(Mlp& net, std::size_t i) {
    for (std::size_t l = 0; l < net.layers(); ++l) {
      if (i < net.w_[l].size()) return &net.w_[l][i];
      i -= net.w_[l].size();
      if (i < net.b_[l].size()) return &net.b_[l][i];
      i -= net.b_[l].size();
    }
    throw std::out_of_range("parameter index outside the network");
  }

  static void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }

  // acts[l] is the activation entering layer l; the return value is the
  // identity output of the last layer.
  std::vector<double> forward_cached(std::span<const double> input,
                                     std::vector<std::vector<double>>& acts) const {
    if (static_cast<int>(input.size()) != input_width())
      throw std::invalid_argument("input width " + std::to_string(input.size()) +
                                  " does not match network input " + std::to_string(input_width()));
    acts.assign(layers(), {});
    std::vector<double> cur(input.begin(), input.end());
    for (std::size_t l = 0; l < layers(); ++l) {
      acts[l] = cur;
      const int in_w = dims_[l];
      const int out_w = dims_[l + 1];
      std::vector<double> next(static_cast<std::size_t>(out_w));
      for (int o = 0; o < out_w; ++o) {
        const double* wrow = w_[l].data() + static_cast<std::size_t>(o) * in_w;
        double acc = b_[l][static_cast<std::size_t>(o)];
        for (int i = 0; i < in_w; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(o)] = acc;
      }
      if (l + 1 < layers()) {
        for (double& v : next) {
          if (!std::isfinite(v)) throw std::runtime_error("non-finite value in forward pass");
          v = v > 0.0 ? v : 0.0;
        }
      }
      cur = std::move(next);
    }
    for (double v : cur)
      if (!std::isfinite(v)) throw std::runtime_error("non-finite value in forward pass");
    return cur;
  }

  std::vector<int> dims_;
  std::vector<std::vector<double>> w_;  // per layer, row-major out x in
  std::vector<std::vector<double>> b_;
};

}  // namespace deepmac
