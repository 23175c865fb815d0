#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcdcsr/core.hpp"
#include "dcdcsr/dnnmap.hpp"
#include "dcdcsr/mf.hpp"
#include "dcdcsr/pipeline.hpp"

namespace dcdcsr {

using Predictor = std::function<double(const std::string& user,
                                       const std::string& item)>;

struct MetricPair {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// MAE and RMSE of the predictor over every test triple.
MetricPair score(const Predictor& predict, const RatingDataset& test);

enum class Strategy { Dcdcsr, TargetOnly, DirectReplace, EmcdrLin, EmcdrMlp };

struct MethodSpec {
  std::string name;  // e.g. PMF_DCDCSR
  MfModelKind model = MfModelKind::PMF;
  Strategy strategy = Strategy::Dcdcsr;
};

/// Parses "pmf_dcdcsr", "bpr_target", "pmf_replace", "pmf_emcdr_lin", ...
MethodSpec method_from_string(const std::string& s);

struct ExperimentOptions {
  Task task = Task::CDR;
  MfConfig mf;
  int k_neighbors = 5;
  MapTrainConfig map;
  int d_layers = 5;
};

struct CellResult {
  std::uint64_t seed = 0;
  std::optional<MetricPair> metrics;
  std::string error;  // set when the method failed for this seed
};

struct ExperimentReport {
  std::string method;
  std::vector<CellResult> cells;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;

  /// "0.7037 (± 0.0005)" style.
  std::string display_mae() const;
  std::string display_rmse() const;
};

/// A named predictor factory; seed is the per-run master seed all methods
/// share, so runs differ only in method.
struct MethodRunner {
  std::string name;
  std::function<Predictor(std::uint64_t seed)> build;
};

/// Scores every (method, seed) cell on test; a cell failure is recorded
/// and aggregation continues. Mean and sample (n-1) std over the
/// successful cells.
std::vector<ExperimentReport> run_experiment(
    const std::vector<MethodRunner>& methods, const RatingDataset& test,
    const std::vector<std::uint64_t>& seeds);

/// Convenience form: builds the standard in-memory runners for each spec.
std::vector<ExperimentReport> run_experiment(
    const RatingDataset& source, const RatingDataset& target_train,
    const RatingDataset& target_test, const std::vector<MethodSpec>& methods,
    const std::vector<std::uint64_t>& seeds, const ExperimentOptions& opt);

MethodRunner make_runner(const MethodSpec& spec, const RatingDataset& source,
                         const RatingDataset& target_train,
                         const ExperimentOptions& opt);

Predictor predictor_from_model(MfModel m);

/// MF on the target data alone; cfg.seed is the per-run master seed.
Predictor baseline_target_only(const RatingDataset& target_train,
                               const MfConfig& cfg);

/// Common entities' factors overwritten by the source model's, other side
/// retrained with the replaced side fixed.
Predictor baseline_direct_replace(const RatingDataset& source,
                                  const RatingDataset& target_train,
                                  const MfConfig& cfg, Task task);

enum class EmcdrMode { LIN, MLP };

/// Least-squares linear map with bias from the common entities' source
/// factors to their target factors (minimum-norm when underdetermined).
/// Returns the mapped factors; coeffs, when given, receives the
/// (K+1) x K coefficient matrix row-major with the bias in the last row.
FactorMatrix fit_linear_map(const FactorMatrix& src, const FactorMatrix& tgt,
                            const std::set<std::string>& commons,
                            std::vector<double>* coeffs = nullptr);

/// Learns source->target factor mapping on common entities (least-squares
/// linear map with bias, or a one-hidden-layer tansig MLP), replaces the
/// common entities' target factors with the mapped source factors and
/// retrains the other side.
Predictor baseline_emcdr(const RatingDataset& source,
                         const RatingDataset& target_train,
                         const MfConfig& cfg, EmcdrMode mode, Task task,
                         const MapTrainConfig& map_cfg);

}  // namespace dcdcsr
