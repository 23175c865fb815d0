#include "dcdcsr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

#include "dcdcsr/bridge.hpp"
#include "dcdcsr/rng.hpp"

namespace dcdcsr {

MetricPair score(const Predictor& predict, const RatingDataset& test) {
  if (test.size() == 0) throw std::runtime_error("empty test set");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& t : test.triples()) {
    double e = predict(t.user, t.item) - t.rating;
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  double n = static_cast<double>(test.size());
  return {abs_sum / n, std::sqrt(sq_sum / n), test.size()};
}

MethodSpec method_from_string(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto cut = lower.find('_');
  if (cut == std::string::npos) {
    throw std::runtime_error("bad method '" + s +
                             "': expected <model>_<strategy>");
  }
  MethodSpec spec;
  spec.model = mf_kind_from_string(lower.substr(0, cut));
  std::string strat = lower.substr(cut + 1);
  if (strat == "dcdcsr") {
    spec.strategy = Strategy::Dcdcsr;
  } else if (strat == "target") {
    spec.strategy = Strategy::TargetOnly;
  } else if (strat == "replace") {
    spec.strategy = Strategy::DirectReplace;
  } else if (strat == "emcdr_lin") {
    spec.strategy = Strategy::EmcdrLin;
  } else if (strat == "emcdr_mlp") {
    spec.strategy = Strategy::EmcdrMlp;
  } else {
    throw std::runtime_error(
        "bad method '" + s +
        "': strategy must be dcdcsr|target|replace|emcdr_lin|emcdr_mlp");
  }
  std::string upper = lower;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  spec.name = upper;
  return spec;
}

namespace {

std::string display(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f (± %.4f)", mean, std);
  return buf;
}

void aggregate(ExperimentReport& rep) {
  std::vector<double> maes, rmses;
  for (const auto& c : rep.cells) {
    if (c.metrics) {
      maes.push_back(c.metrics->mae);
      rmses.push_back(c.metrics->rmse);
    }
  }
  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto std_of = [](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;  // single sample reports std 0
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  rep.mae_mean = mean_of(maes);
  rep.mae_std = std_of(maes, rep.mae_mean);
  rep.rmse_mean = mean_of(rmses);
  rep.rmse_std = std_of(rmses, rep.rmse_mean);
}

// Replaces rows of dst with src rows for every id in commons.
void overwrite_rows(FactorMatrix& dst, const FactorMatrix& src,
                    const std::set<std::string>& commons) {
  for (const auto& id : commons) {
    auto from = src.row(id);
    auto to = dst.row_mut(id);
    std::copy(from.begin(), from.end(), to.begin());
  }
}

FixedSide mapped_side(Task task) {
  return task == Task::CDR ? FixedSide::Users : FixedSide::Items;
}

const FactorMatrix& side_of(const MfModel& m, Task task) {
  return task == Task::CDR ? m.users : m.items;
}

FactorMatrix& side_of(MfModel& m, Task task) {
  return task == Task::CDR ? m.users : m.items;
}

struct SourceTargetModels {
  MfModel source;
  MfModel target;
};

SourceTargetModels train_both(const RatingDataset& source,
                              const RatingDataset& target_train,
                              const MfConfig& cfg) {
  MfConfig src_cfg = cfg;
  src_cfg.seed = derive_seed(cfg.seed, "mf-source");
  MfConfig tgt_cfg = cfg;
  tgt_cfg.seed = derive_seed(cfg.seed, "mf-target");
  return {train(source, src_cfg), train(target_train, tgt_cfg)};
}

std::set<std::string> require_commons(const MfModel& source,
                                      const MfModel& target, Task task) {
  auto commons = common_entities(side_of(source, task), side_of(target, task));
  if (commons.empty()) {
    throw std::runtime_error(
        std::string("no common entities: ") +
        (task == Task::CDR ? "CDR requires shared users"
                           : "CSR requires shared items"));
  }
  return commons;
}

FactorMatrix subset(const FactorMatrix& m, const std::set<std::string>& ids) {
  FactorMatrix out(m.dim());
  for (const auto& id : m.ids()) {
    if (ids.count(id)) out.insert(id, m.row(id));
  }
  return out;
}

}  // namespace

FactorMatrix fit_linear_map(const FactorMatrix& src, const FactorMatrix& tgt,
                            const std::set<std::string>& commons,
                            std::vector<double>* coeffs) {
  int K = src.dim();
  Eigen::MatrixXd X(commons.size(), K + 1);
  Eigen::MatrixXd Y(commons.size(), K);
  std::size_t r = 0;
  for (const auto& id : commons) {
    auto s = src.row(id);
    auto t = tgt.row(id);
    for (int c = 0; c < K; ++c) {
      X(r, c) = s[c];
      Y(r, c) = t[c];
    }
    X(r, K) = 1.0;
    ++r;
  }
  // minimum-norm least squares, well defined even when underdetermined
  Eigen::MatrixXd W = X.completeOrthogonalDecomposition().solve(Y);
  if (coeffs) {
    coeffs->clear();
    for (int row = 0; row < K + 1; ++row) {
      for (int c = 0; c < K; ++c) coeffs->push_back(W(row, c));
    }
  }

  FactorMatrix mapped(K);
  std::vector<double> buf(K);
  for (const auto& id : commons) {
    auto s = src.row(id);
    for (int c = 0; c < K; ++c) {
      double acc = W(K, c);
      for (int k = 0; k < K; ++k) acc += W(k, c) * s[k];
      buf[c] = acc;
    }
    mapped.insert(id, buf);
  }
  return mapped;
}

std::string ExperimentReport::display_mae() const {
  return display(mae_mean, mae_std);
}

std::string ExperimentReport::display_rmse() const {
  return display(rmse_mean, rmse_std);
}

Predictor predictor_from_model(MfModel m) {
  auto shared = std::make_shared<MfModel>(std::move(m));
  return [shared](const std::string& user, const std::string& item) {
    return predict(*shared, user, item);
  };
}

Predictor baseline_target_only(const RatingDataset& target_train,
                               const MfConfig& cfg) {
  MfConfig tgt_cfg = cfg;
  tgt_cfg.seed = derive_seed(cfg.seed, "mf-target");
  return predictor_from_model(train(target_train, tgt_cfg));
}

Predictor baseline_direct_replace(const RatingDataset& source,
                                  const RatingDataset& target_train,
                                  const MfConfig& cfg, Task task) {
  auto models = train_both(source, target_train, cfg);
  auto commons = require_commons(models.source, models.target, task);

  MfModel patched = models.target;
  overwrite_rows(side_of(patched, task), side_of(models.source, task), commons);
  patched.config.seed = derive_seed(cfg.seed, "phase3");
  return predictor_from_model(
      retrain_one_side(patched, target_train, mapped_side(task)));
}

Predictor baseline_emcdr(const RatingDataset& source,
                         const RatingDataset& target_train,
                         const MfConfig& cfg, EmcdrMode mode, Task task,
                         const MapTrainConfig& map_cfg) {
  auto models = train_both(source, target_train, cfg);
  auto commons = require_commons(models.source, models.target, task);
  const FactorMatrix& src_side = side_of(models.source, task);
  const FactorMatrix& tgt_side = side_of(models.target, task);

  FactorMatrix mapped;
  if (mode == EmcdrMode::LIN) {
    mapped = fit_linear_map(src_side, tgt_side, commons);
  } else {
    // One hidden layer of ceil(1.5K) tansig units, trained on normalized
    // common-entity pairs like the main mapping network.
    FactorMatrix src_common = subset(src_side, commons);
    FactorMatrix tgt_common = subset(tgt_side, commons);
    NormParams norm_src = fit_norm(src_common);
    NormParams norm_tgt = fit_norm(tgt_common);
    MappingNetwork init =
        init_network(cfg.dim, 2, derive_seed(cfg.seed, "map-init"));
    MapTrainConfig mcfg = map_cfg;
    mcfg.seed = derive_seed(cfg.seed, "map-shuffle");
    MappingNetwork net = train_mapping(init, normalize(src_common, norm_src),
                                       normalize(tgt_common, norm_tgt), mcfg);
    mapped = apply_mapping(net, src_common, norm_src, norm_tgt);
  }

  MfModel patched = models.target;
  overwrite_rows(side_of(patched, task), mapped, commons);
  patched.config.seed = derive_seed(cfg.seed, "phase3");
  return predictor_from_model(
      retrain_one_side(patched, target_train, mapped_side(task)));
}

MethodRunner make_runner(const MethodSpec& spec, const RatingDataset& source,
                         const RatingDataset& target_train,
                         const ExperimentOptions& opt) {
  MethodRunner runner;
  runner.name = spec.name;
  runner.build = [spec, &source, &target_train,
                  opt](std::uint64_t seed) -> Predictor {
    MfConfig mf = opt.mf;
    mf.model = spec.model;
    mf.seed = seed;
    switch (spec.strategy) {
      case Strategy::Dcdcsr: {
        PipelineConfig cfg;
        cfg.task = opt.task;
        cfg.mf = mf;
        cfg.k_neighbors = opt.k_neighbors;
        cfg.map = opt.map;
        cfg.d_layers = opt.d_layers;
        cfg.seed = seed;
        return predictor_from_model(
            run_pipeline(source, target_train, cfg).model);
      }
      case Strategy::TargetOnly:
        return baseline_target_only(target_train, mf);
      case Strategy::DirectReplace:
        return baseline_direct_replace(source, target_train, mf, opt.task);
      case Strategy::EmcdrLin:
        return baseline_emcdr(source, target_train, mf, EmcdrMode::LIN,
                              opt.task, opt.map);
      case Strategy::EmcdrMlp:
        return baseline_emcdr(source, target_train, mf, EmcdrMode::MLP,
                              opt.task, opt.map);
    }
    throw std::logic_error("unreachable");
  };
  return runner;
}

std::vector<ExperimentReport> run_experiment(
    const std::vector<MethodRunner>& methods, const RatingDataset& test,
    const std::vector<std::uint64_t>& seeds) {
  if (methods.empty()) throw std::runtime_error("no methods configured");
  if (seeds.empty()) throw std::runtime_error("no seeds configured");
  std::vector<ExperimentReport> reports;
  for (const auto& method : methods) {
    ExperimentReport rep;
    rep.method = method.name;
    for (std::uint64_t seed : seeds) {
      CellResult cell;
      cell.seed = seed;
      try {
        Predictor p = method.build(seed);
        cell.metrics = score(p, test);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      rep.cells.push_back(std::move(cell));
    }
    aggregate(rep);
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<ExperimentReport> run_experiment(
    const RatingDataset& source, const RatingDataset& target_train,
    const RatingDataset& target_test, const std::vector<MethodSpec>& methods,
    const std::vector<std::uint64_t>& seeds, const ExperimentOptions& opt) {
  std::vector<MethodRunner> runners;
  runners.reserve(methods.size());
  for (const auto& spec : methods) {
    runners.push_back(make_runner(spec, source, target_train, opt));
  }
  return run_experiment(runners, target_test, seeds);
}

}  // namespace dcdcsr
