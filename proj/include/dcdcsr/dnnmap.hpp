#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dcdcsr/core.hpp"

namespace dcdcsr {

/// tansig activation 2/(1+e^(-2x)) - 1, i.e. tanh.
inline double tansig(double x) { return std::tanh(x); }

/// Per-dimension (min, max) ranges mapping factors onto [-1, 1].
struct NormParams {
  std::vector<std::pair<double, double>> ranges;
  std::size_t dim() const { return ranges.size(); }
};

NormParams fit_norm(const FactorMatrix& m);

/// y = 2(x - min)/(max - min) - 1 per dimension; a degenerate dimension
/// (max == min) maps to 0. Out-of-range values extrapolate linearly.
FactorMatrix normalize(const FactorMatrix& m, const NormParams& p);

/// Exact inverse of normalize; a degenerate dimension inverts to min.
FactorMatrix denormalize(const FactorMatrix& m, const NormParams& p);

void normalize_vec(std::span<const double> x, const NormParams& p,
                   std::span<double> out);
void denormalize_vec(std::span<const double> y, const NormParams& p,
                     std::span<double> out);

/// Fully connected tansig network with depth weight layers of widths
/// [K, ceil(1.5K), ..., ceil(1.5K), K]; tansig on every layer including
/// the output.
struct MappingNetwork {
  int dim = 0;    // K
  int depth = 0;  // number of weight layers
  std::vector<int> widths;                    // depth + 1 entries
  std::vector<std::vector<double>> weights;   // weights[j]: widths[j+1] x widths[j]
  std::vector<std::vector<double>> biases;    // biases[j]: widths[j+1]
  std::uint64_t seed = 0;
};

struct MapTrainConfig {
  int batch_size = 32;
  double learning_rate = 0.005;
  int max_epochs = 200;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
};

/// Weights i.i.d. uniform on [-1/sqrt(2K), 1/sqrt(2K)], zero biases.
MappingNetwork init_network(int K, int d, std::uint64_t seed);

std::vector<double> forward(const MappingNetwork& net,
                            std::span<const double> x);

/// Mean of |h(x)-y|^2 / K over the pairs.
double mapping_batch_loss(const MappingNetwork& net,
                          const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& ys);

/// Exact gradient of mapping_batch_loss, written into an identically
/// shaped network.
void mapping_batch_gradient(const MappingNetwork& net,
                            const std::vector<std::vector<double>>& xs,
                            const std::vector<std::vector<double>>& ys,
                            MappingNetwork* grad);

/// Mini-batch gradient descent on the square loss over entity pairs
/// (inputs and targets share keys, both already normalized). Returns the
/// parameters with the lowest full-data loss seen; optionally records the
/// loss curve (entry 0 is the initial loss).
MappingNetwork train_mapping(const MappingNetwork& net,
                             const FactorMatrix& inputs,
                             const FactorMatrix& targets,
                             const MapTrainConfig& cfg,
                             std::vector<double>* loss_curve = nullptr);

/// denormalize(forward(normalize(row))) for every entity.
FactorMatrix apply_mapping(const MappingNetwork& net, const FactorMatrix& m,
                           const NormParams& norm_in,
                           const NormParams& norm_out);

}  // namespace dcdcsr
