#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcdcsr/core.hpp"

namespace dcdcsr {

enum class MfModelKind { PMF, MMMF, BPR };

enum class BatchMode { Stochastic, FullBatch };

std::string to_string(MfModelKind kind);
MfModelKind mf_kind_from_string(const std::string& s);

struct MfConfig {
  MfModelKind model = MfModelKind::PMF;
  int dim = 10;
  double learning_rate = 0.01;
  double regularization = 0.01;
  int epochs = 100;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  BatchMode batch = BatchMode::Stochastic;
};

/// Trained factor model. Thresholds are MMMF-only (per-user, sorted);
/// the (calib_a, calib_b) affine pair maps BPR scores onto the rating scale.
struct MfModel {
  MfConfig config;
  FactorMatrix users;
  FactorMatrix items;
  double global_mean = 0.0;
  RatingScale scale;
  std::vector<double> levels;
  std::unordered_map<std::string, std::vector<double>> thresholds;
  double calib_a = 1.0;
  double calib_b = 0.0;
};

enum class FixedSide { Users, Items };

/// Trains the configured MF model on d. Deterministic given cfg.seed.
MfModel train(const RatingDataset& d, const MfConfig& cfg);

/// U_i . V_j (calibrated for BPR), clamped to the rating scale; unknown
/// user or item falls back to the global mean training rating.
double predict(const MfModel& m, const std::string& user,
               const std::string& item);

/// Re-optimizes the free side on d with the other side frozen bit-for-bit.
/// epochs overrides the config value when set; 0 epochs returns m unchanged.
MfModel retrain_one_side(const MfModel& m, const RatingDataset& d,
                         FixedSide fixed,
                         std::optional<int> epochs = std::nullopt);

/// The model's training objective evaluated on d (regularization included).
/// BPR enumerates every rankable pair, so keep to small instances.
double objective(const MfModel& m, const RatingDataset& d);

/// Fraction of rankable (higher-rated, lower-rated) training pairs the raw
/// scores order correctly.
double pair_accuracy(const MfModel& m, const RatingDataset& d);

/// Per-rating PMF loss (r - u.v)^2 + lambda(|u|^2 + |v|^2) and its exact
/// gradient; the SGD trainer steps along this same gradient.
double pmf_rating_loss(std::span<const double> u, std::span<const double> v,
                       double r, double lambda);
void pmf_rating_gradient(std::span<const double> u, std::span<const double> v,
                         double r, double lambda, std::span<double> gu,
                         std::span<double> gv);

}  // namespace dcdcsr
