#include "dcdcsr/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dcdcsr/vecmath.hpp"

namespace dcdcsr {

std::set<std::string> common_entities(const FactorMatrix& source,
                                      const FactorMatrix& target) {
  std::set<std::string> out;
  for (const auto& id : target.ids()) {
    if (source.contains(id)) out.insert(id);
  }
  return out;
}

SparsityProfile sparsity_common(const std::string& e, const RatingDataset& src,
                                const RatingDataset& tgt, EntityKind kind) {
  SparsityProfile p;
  p.entity = e;
  p.n_source = src.rating_count(e, kind);
  p.n_target = tgt.rating_count(e, kind);
  std::size_t total = p.n_source + p.n_target;
  if (total == 0) {
    throw std::runtime_error("entity '" + e +
                             "' has no ratings in either dataset");
  }
  p.alpha_source =
      static_cast<double>(p.n_target) / static_cast<double>(total);
  p.alpha_target = 1.0 - p.alpha_source;
  return p;
}

std::vector<double> benchmark_common(const std::string& e,
                                     const FactorMatrix& source_factors,
                                     const FactorMatrix& target_factors,
                                     const SparsityProfile& p) {
  auto us = source_factors.row(e);
  auto ut = target_factors.row(e);
  if (us.size() != ut.size()) {
    throw std::runtime_error("factor dimension mismatch for '" + e + "'");
  }
  double ws = 1.0 - p.alpha_source;
  double wt = 1.0 - p.alpha_target;
  std::vector<double> out(us.size());
  for (std::size_t c = 0; c < us.size(); ++c) {
    out[c] = ws * us[c] + wt * ut[c];
  }
  return out;
}

NeighborSet topk_similar(const std::string& e,
                         const FactorMatrix& target_factors,
                         const std::set<std::string>& commons, int k) {
  NeighborSet ns;
  ns.entity = e;
  auto x = target_factors.row(e);
  double xn = norm2(x);
  if (xn == 0.0) return ns;  // cosine undefined for the zero vector

  std::vector<std::pair<std::string, double>> sims;
  for (const auto& c : commons) {
    auto y = target_factors.row(c);
    double yn = norm2(y);
    if (yn == 0.0) continue;
    double sim = dot(x, y) / (xn * yn);
    if (sim > 0.0) sims.emplace_back(c, sim);
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(sims.size()) > k) sims.resize(k);
  ns.neighbors = std::move(sims);
  return ns;
}

NeighborSet sparsity_different(const std::string& e, const RatingDataset& tgt,
                               NeighborSet ns, const RatingDataset& src,
                               EntityKind kind) {
  double n_target = static_cast<double>(tgt.rating_count(e, kind));
  double sn = 0.0;
  for (const auto& [id, sim] : ns.neighbors) {
    sn += static_cast<double>(src.rating_count(id, kind));
  }
  if (!ns.neighbors.empty()) sn /= static_cast<double>(ns.neighbors.size());
  ns.sn_source = sn;
  ns.beta = sn > 0.0 ? sn / (n_target + sn) : 0.0;
  return ns;
}

std::vector<double> benchmark_different(const std::string& e,
                                        const FactorMatrix& target_factors,
                                        const FactorMatrix& source_factors,
                                        const NeighborSet& ns) {
  auto ut = target_factors.row(e);
  std::vector<double> out(ut.begin(), ut.end());
  if (ns.neighbors.empty()) return out;

  std::vector<double> su(ut.size(), 0.0);
  double sim_sum = 0.0;
  for (const auto& [id, sim] : ns.neighbors) {
    auto us = source_factors.row(id);
    if (us.size() != ut.size()) {
      throw std::runtime_error("factor dimension mismatch for '" + id + "'");
    }
    for (std::size_t c = 0; c < su.size(); ++c) su[c] += sim * us[c];
    sim_sum += sim;
  }
  for (std::size_t c = 0; c < su.size(); ++c) su[c] /= sim_sum;
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = (1.0 - ns.beta) * ut[c] + ns.beta * su[c];
  }
  return out;
}

FactorMatrix assemble_benchmark(
    const std::map<std::string, std::vector<double>>& commons,
    const std::map<std::string, std::vector<double>>& differents) {
  std::size_t dim = 0;
  if (!commons.empty()) {
    dim = commons.begin()->second.size();
  } else if (!differents.empty()) {
    dim = differents.begin()->second.size();
  }
  FactorMatrix out(static_cast<int>(dim));
  for (const auto& [id, v] : commons) out.insert(id, v);
  for (const auto& [id, v] : differents) {
    if (commons.count(id)) {
      throw std::runtime_error("entity '" + id +
                               "' appears as both common and different");
    }
    out.insert(id, v);
  }
  return out;
}

FactorMatrix build_benchmark(const FactorMatrix& source_factors,
                             const FactorMatrix& target_factors,
                             const RatingDataset& src, const RatingDataset& tgt,
                             EntityKind kind, int k) {
  auto commons = common_entities(source_factors, target_factors);
  FactorMatrix out(target_factors.dim());
  // preserve the target matrix's entity order
  for (const auto& id : target_factors.ids()) {
    if (commons.count(id)) {
      auto p = sparsity_common(id, src, tgt, kind);
      out.insert(id, benchmark_common(id, source_factors, target_factors, p));
    } else {
      auto ns = topk_similar(id, target_factors, commons, k);
      ns = sparsity_different(id, tgt, std::move(ns), src, kind);
      out.insert(id, benchmark_different(id, target_factors, source_factors, ns));
    }
  }
  return out;
}

void write_sparsity_csv(const std::string& path,
                        const FactorMatrix& source_factors,
                        const FactorMatrix& target_factors,
                        const RatingDataset& src, const RatingDataset& tgt,
                        EntityKind kind, int k) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id,kind,n_source,n_target,alpha_source,alpha_target,beta,neighbors\n";
  const char* kind_name = kind == EntityKind::User ? "user" : "item";
  auto commons = common_entities(source_factors, target_factors);
  for (const auto& id : target_factors.ids()) {
    if (commons.count(id)) {
      auto p = sparsity_common(id, src, tgt, kind);
      out << id << ',' << kind_name << ',' << p.n_source << ',' << p.n_target
          << ',' << p.alpha_source << ',' << p.alpha_target << ",,\n";
    } else {
      auto ns = topk_similar(id, target_factors, commons, k);
      ns = sparsity_different(id, tgt, std::move(ns), src, kind);
      out << id << ',' << kind_name << ",," << tgt.rating_count(id, kind)
          << ",,," << ns.beta << ',';
      for (std::size_t i = 0; i < ns.neighbors.size(); ++i) {
        if (i) out << ';';
        out << ns.neighbors[i].first << ':' << ns.neighbors[i].second;
      }
      out << '\n';
    }
  }
}

}  // namespace dcdcsr
