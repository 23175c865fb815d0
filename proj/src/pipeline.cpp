#include "dcdcsr/pipeline.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dcdcsr/rng.hpp"

namespace dcdcsr {

std::string to_string(Task t) { return t == Task::CDR ? "cdr" : "csr"; }

Task task_from_string(const std::string& s) {
  if (s == "cdr" || s == "CDR") return Task::CDR;
  if (s == "csr" || s == "CSR") return Task::CSR;
  throw std::runtime_error("unknown task '" + s + "' (cdr|csr)");
}

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("[") + stage + "] " + e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const RatingDataset& source,
                            const RatingDataset& target_train,
                            const PipelineConfig& cfg) {
  EntityKind kind = cfg.task == Task::CDR ? EntityKind::User : EntityKind::Item;

  PipelineResult res;

  // Phase 1: MF modeling on both datasets.
  MfConfig src_cfg = cfg.mf;
  src_cfg.seed = derive_seed(cfg.seed, "mf-source");
  MfConfig tgt_cfg = cfg.mf;
  tgt_cfg.seed = derive_seed(cfg.seed, "mf-target");
  res.source_model = staged("mf-source", [&] { return train(source, src_cfg); });
  res.target_model =
      staged("mf-target", [&] { return train(target_train, tgt_cfg); });

  const FactorMatrix& src_side = kind == EntityKind::User
                                     ? res.source_model.users
                                     : res.source_model.items;
  const FactorMatrix& tgt_side = kind == EntityKind::User
                                     ? res.target_model.users
                                     : res.target_model.items;

  if (common_entities(src_side, tgt_side).empty()) {
    throw std::runtime_error(
        std::string("no common entities: ") +
        (cfg.task == Task::CDR ? "CDR requires shared users"
                               : "CSR requires shared items"));
  }

  // Phase 2: benchmark factors, then the DNN mapping.
  res.benchmark = staged("bridge", [&] {
    return build_benchmark(src_side, tgt_side, source, target_train, kind,
                           cfg.k_neighbors);
  });

  res.norm_target = fit_norm(tgt_side);
  res.norm_benchmark = fit_norm(res.benchmark);
  FactorMatrix norm_in = normalize(tgt_side, res.norm_target);
  FactorMatrix norm_out = normalize(res.benchmark, res.norm_benchmark);

  MappingNetwork init = init_network(cfg.mf.dim, cfg.d_layers,
                                     derive_seed(cfg.seed, "map-init"));
  MapTrainConfig map_cfg = cfg.map;
  map_cfg.seed = derive_seed(cfg.seed, "map-shuffle");
  res.network = staged("map", [&] {
    return train_mapping(init, norm_in, norm_out, map_cfg,
                         &res.map_loss_curve);
  });
  res.mapped = staged("map", [&] {
    return apply_mapping(res.network, tgt_side, res.norm_target,
                         res.norm_benchmark);
  });

  // Phase 3: freeze the mapped side and retrain the other from the
  // phase-1 target factors.
  MfModel warm = res.target_model;
  if (kind == EntityKind::User) {
    warm.users = res.mapped;
  } else {
    warm.items = res.mapped;
  }
  warm.config.seed = derive_seed(cfg.seed, "phase3");
  res.model = staged("finetune", [&] {
    return retrain_one_side(
        warm, target_train,
        kind == EntityKind::User ? FixedSide::Users : FixedSide::Items);
  });
  return res;
}

std::vector<std::pair<std::string, double>> recommend(
    const PipelineResult& res, const std::string& user,
    const RatingDataset& target_train, int n) {
  std::vector<std::pair<std::string, double>> out;
  if (n <= 0) return out;
  if (target_train.users().get(user) == EntityIndex::npos) return out;

  std::set<std::string> rated;
  for (const auto& t : target_train.triples()) {
    if (t.user == user) rated.insert(t.item);
  }
  for (const auto& item : target_train.items().ids()) {
    if (rated.count(item)) continue;
    out.emplace_back(item, predict(res.model, user, item));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(out.size()) > n) out.resize(n);
  return out;
}

}  // namespace dcdcsr
