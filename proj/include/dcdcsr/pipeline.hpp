#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dcdcsr/bridge.hpp"
#include "dcdcsr/core.hpp"
#include "dcdcsr/dnnmap.hpp"
#include "dcdcsr/mf.hpp"

namespace dcdcsr {

enum class Task { CDR, CSR };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct PipelineConfig {
  Task task = Task::CDR;
  MfConfig mf;
  int k_neighbors = 5;
  MapTrainConfig map;
  int d_layers = 5;
  int top_n = 10;
  std::uint64_t seed = 0;
};

/// Everything the run produced: the final model (mapped side + fine-tuned
/// side), the phase artifacts and the normalization used by the mapping.
struct PipelineResult {
  MfModel model;
  MfModel source_model;
  MfModel target_model;
  FactorMatrix benchmark;
  FactorMatrix mapped;
  MappingNetwork network;
  NormParams norm_target;
  NormParams norm_benchmark;
  std::vector<double> map_loss_curve;
};

/// Runs the three phases end to end: MF on both datasets, benchmark
/// factor generation for the linking side (users for CDR, items for CSR),
/// DNN mapping of the target factors onto the benchmark, then one-sided
/// retraining with the mapped side frozen. Deterministic given cfg.seed.
PipelineResult run_pipeline(const RatingDataset& source,
                            const RatingDataset& target_train,
                            const PipelineConfig& cfg);

/// Top-n items the user has not rated in train, by predicted rating
/// (descending, ties broken by item id). Unknown user: empty list.
std::vector<std::pair<std::string, double>> recommend(
    const PipelineResult& res, const std::string& user,
    const RatingDataset& target_train, int n);

}  // namespace dcdcsr
