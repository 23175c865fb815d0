#include "dcdcsr/dnnmap.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dcdcsr/rng.hpp"

namespace dcdcsr {

NormParams fit_norm(const FactorMatrix& m) {
  if (m.empty()) throw std::runtime_error("cannot fit norm on empty matrix");
  NormParams p;
  p.ranges.assign(m.dim(), {0.0, 0.0});
  bool first = true;
  for (const auto& id : m.ids()) {
    auto row = m.row(id);
    for (int c = 0; c < m.dim(); ++c) {
      if (first) {
        p.ranges[c] = {row[c], row[c]};
      } else {
        p.ranges[c].first = std::min(p.ranges[c].first, row[c]);
        p.ranges[c].second = std::max(p.ranges[c].second, row[c]);
      }
    }
    first = false;
  }
  return p;
}

void normalize_vec(std::span<const double> x, const NormParams& p,
                   std::span<double> out) {
  if (x.size() != p.dim()) {
    throw std::runtime_error("normalize: dimension mismatch");
  }
  for (std::size_t c = 0; c < x.size(); ++c) {
    auto [lo, hi] = p.ranges[c];
    out[c] = hi > lo ? 2.0 * (x[c] - lo) / (hi - lo) - 1.0 : 0.0;
  }
}

void denormalize_vec(std::span<const double> y, const NormParams& p,
                     std::span<double> out) {
  if (y.size() != p.dim()) {
    throw std::runtime_error("denormalize: dimension mismatch");
  }
  for (std::size_t c = 0; c < y.size(); ++c) {
    auto [lo, hi] = p.ranges[c];
    out[c] = hi > lo ? (y[c] + 1.0) * (hi - lo) / 2.0 + lo : lo;
  }
}

namespace {

FactorMatrix map_rows(const FactorMatrix& m, const NormParams& p,
                      void (*fn)(std::span<const double>, const NormParams&,
                                 std::span<double>)) {
  FactorMatrix out(m.dim());
  std::vector<double> buf(m.dim());
  for (const auto& id : m.ids()) {
    fn(m.row(id), p, buf);
    out.insert(id, buf);
  }
  return out;
}

}  // namespace

FactorMatrix normalize(const FactorMatrix& m, const NormParams& p) {
  return map_rows(m, p, normalize_vec);
}

FactorMatrix denormalize(const FactorMatrix& m, const NormParams& p) {
  return map_rows(m, p, denormalize_vec);
}

MappingNetwork init_network(int K, int d, std::uint64_t seed) {
  if (K < 1 || d < 1) throw std::runtime_error("init_network: K, d must be >= 1");
  MappingNetwork net;
  net.dim = K;
  net.depth = d;
  net.seed = seed;
  int hidden = static_cast<int>(std::ceil(1.5 * K));
  net.widths.assign(d + 1, hidden);
  net.widths.front() = K;
  net.widths.back() = K;

  Rng rng(seed);
  double bound = 1.0 / std::sqrt(2.0 * K);
  net.weights.resize(d);
  net.biases.resize(d);
  for (int j = 0; j < d; ++j) {
    std::size_t rows = net.widths[j + 1], cols = net.widths[j];
    net.weights[j].resize(rows * cols);
    for (auto& w : net.weights[j]) w = rng.uniform(-bound, bound);
    net.biases[j].assign(rows, 0.0);
  }
  return net;
}

std::vector<double> forward(const MappingNetwork& net,
                            std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.dim) {
    throw std::runtime_error("forward: input length != K");
  }
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> next;
  for (int j = 0; j < net.depth; ++j) {
    std::size_t rows = net.widths[j + 1], cols = net.widths[j];
    next.assign(rows, 0.0);
    const auto& W = net.weights[j];
    for (std::size_t r = 0; r < rows; ++r) {
      double z = net.biases[j][r];
      for (std::size_t c = 0; c < cols; ++c) z += W[r * cols + c] * a[c];
      next[r] = tansig(z);
    }
    a.swap(next);
  }
  return a;
}

namespace {

struct Tape {
  std::vector<std::vector<double>> act;  // act[0] = input, act[depth] = output
};

void forward_tape(const MappingNetwork& net, std::span<const double> x,
                  Tape& tape) {
  tape.act.resize(net.depth + 1);
  tape.act[0].assign(x.begin(), x.end());
  for (int j = 0; j < net.depth; ++j) {
    std::size_t rows = net.widths[j + 1], cols = net.widths[j];
    auto& out = tape.act[j + 1];
    out.assign(rows, 0.0);
    const auto& W = net.weights[j];
    const auto& a = tape.act[j];
    for (std::size_t r = 0; r < rows; ++r) {
      double z = net.biases[j][r];
      for (std::size_t c = 0; c < cols; ++c) z += W[r * cols + c] * a[c];
      out[r] = tansig(z);
    }
  }
}

// Adds the gradient of |h(x)-y|^2 / (K * weight_denominator) to grad.
void backprop_sample(const MappingNetwork& net, const Tape& tape,
                     std::span<const double> y, double denom,
                     MappingNetwork& grad) {
  const auto& out = tape.act[net.depth];
  std::vector<double> delta(out.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    double dl = 2.0 * (out[r] - y[r]) / (static_cast<double>(net.dim) * denom);
    delta[r] = dl * (1.0 - out[r] * out[r]);  // tansig'(z) = 1 - f(z)^2
  }
  std::vector<double> prev;
  for (int j = net.depth - 1; j >= 0; --j) {
    std::size_t rows = net.widths[j + 1], cols = net.widths[j];
    const auto& a = tape.act[j];
    auto& gW = grad.weights[j];
    auto& gb = grad.biases[j];
    for (std::size_t r = 0; r < rows; ++r) {
      gb[r] += delta[r];
      for (std::size_t c = 0; c < cols; ++c) {
        gW[r * cols + c] += delta[r] * a[c];
      }
    }
    if (j > 0) {
      prev.assign(cols, 0.0);
      const auto& W = net.weights[j];
      for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          s += W[r * cols + c] * delta[r];
        }
        prev[c] = s * (1.0 - a[c] * a[c]);
      }
      delta.swap(prev);
    }
  }
}

MappingNetwork zero_like(const MappingNetwork& net) {
  MappingNetwork g = net;
  for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.biases) std::fill(b.begin(), b.end(), 0.0);
  return g;
}

double sample_loss(const MappingNetwork& net, std::span<const double> x,
                   std::span<const double> y) {
  auto h = forward(net, x);
  double s = 0.0;
  for (std::size_t r = 0; r < h.size(); ++r) {
    s += (h[r] - y[r]) * (h[r] - y[r]);
  }
  return s / static_cast<double>(net.dim);
}

}  // namespace

double mapping_batch_loss(const MappingNetwork& net,
                          const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& ys) {
  double s = 0.0;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    s += sample_loss(net, xs[b], ys[b]);
  }
  return s / static_cast<double>(xs.size());
}

void mapping_batch_gradient(const MappingNetwork& net,
                            const std::vector<std::vector<double>>& xs,
                            const std::vector<std::vector<double>>& ys,
                            MappingNetwork* grad) {
  *grad = zero_like(net);
  double denom = static_cast<double>(xs.size());
  Tape tape;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    forward_tape(net, xs[b], tape);
    backprop_sample(net, tape, ys[b], denom, *grad);
  }
}

MappingNetwork train_mapping(const MappingNetwork& net,
                             const FactorMatrix& inputs,
                             const FactorMatrix& targets,
                             const MapTrainConfig& cfg,
                             std::vector<double>* loss_curve) {
  if (inputs.size() != targets.size()) {
    throw std::runtime_error("train_mapping: input/target key sets differ");
  }
  if (cfg.batch_size < 1) {
    throw std::runtime_error("train_mapping: batch_size must be >= 1");
  }
  std::vector<std::span<const double>> xs, ys;
  xs.reserve(inputs.size());
  ys.reserve(inputs.size());
  for (const auto& id : inputs.ids()) {
    if (!targets.contains(id)) {
      throw std::runtime_error("train_mapping: no target for entity '" + id +
                               "'");
    }
    xs.push_back(inputs.row(id));
    ys.push_back(targets.row(id));
  }

  auto full_loss = [&](const MappingNetwork& n) {
    double s = 0.0;
    for (std::size_t b = 0; b < xs.size(); ++b) {
      s += sample_loss(n, xs[b], ys[b]);
    }
    return s / static_cast<double>(xs.size());
  };

  MappingNetwork cur = net;
  double best_loss = full_loss(cur);
  MappingNetwork best = cur;
  if (loss_curve) loss_curve->push_back(best_loss);

  constexpr double kMinDelta = 1e-6;
  Rng rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  MappingNetwork grad = zero_like(net);
  Tape tape;
  int stall = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(),
                                  start + static_cast<std::size_t>(cfg.batch_size));
      double denom = static_cast<double>(stop - start);
      for (auto& w : grad.weights) std::fill(w.begin(), w.end(), 0.0);
      for (auto& b : grad.biases) std::fill(b.begin(), b.end(), 0.0);
      for (std::size_t s = start; s < stop; ++s) {
        forward_tape(cur, xs[order[s]], tape);
        backprop_sample(cur, tape, ys[order[s]], denom, grad);
      }
      for (int j = 0; j < cur.depth; ++j) {
        auto& W = cur.weights[j];
        const auto& gW = grad.weights[j];
        for (std::size_t t = 0; t < W.size(); ++t) {
          W[t] -= cfg.learning_rate * gW[t];
        }
        auto& b = cur.biases[j];
        const auto& gb = grad.biases[j];
        for (std::size_t t = 0; t < b.size(); ++t) {
          b[t] -= cfg.learning_rate * gb[t];
        }
      }
    }
    double loss = full_loss(cur);
    if (std::isnan(loss)) {
      throw std::runtime_error("train_mapping diverged: NaN loss");
    }
    if (loss_curve) loss_curve->push_back(loss);
    if (loss < best_loss - kMinDelta) {
      stall = 0;
    } else {
      ++stall;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = cur;
    }
    if (stall > cfg.early_stop_patience) break;
  }
  return best;
}

FactorMatrix apply_mapping(const MappingNetwork& net, const FactorMatrix& m,
                           const NormParams& norm_in,
                           const NormParams& norm_out) {
  FactorMatrix out(m.dim());
  std::vector<double> norm_buf(m.dim()), denorm_buf(m.dim());
  for (const auto& id : m.ids()) {
    normalize_vec(m.row(id), norm_in, norm_buf);
    auto h = forward(net, norm_buf);
    denormalize_vec(h, norm_out, denorm_buf);
    out.insert(id, denorm_buf);
  }
  return out;
}

}  // namespace dcdcsr
