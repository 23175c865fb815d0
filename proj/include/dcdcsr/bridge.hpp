#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dcdcsr/core.hpp"

namespace dcdcsr {

/// Rating counts of a common entity in both datasets and the derived
/// sparsity degrees: alpha_source = n_target / (n_source + n_target),
/// alpha_target = 1 - alpha_source.
struct SparsityProfile {
  std::string entity;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  double alpha_source = 0.0;
  double alpha_target = 0.0;
};

/// Top-k common neighbors of a different entity, by cosine similarity of
/// target-domain factors, plus the derived sparsity degree beta.
struct NeighborSet {
  std::string entity;
  std::vector<std::pair<std::string, double>> neighbors;  // sim descending
  double beta = 0.0;
  double sn_source = 0.0;  // mean source rating count over neighbors
};

/// Entity ids present in both factor matrices.
std::set<std::string> common_entities(const FactorMatrix& source,
                                      const FactorMatrix& target);

SparsityProfile sparsity_common(const std::string& e, const RatingDataset& src,
                                const RatingDataset& tgt, EntityKind kind);

/// (1 - alpha_source) * U_s[e] + (1 - alpha_target) * U_t[e].
std::vector<double> benchmark_common(const std::string& e,
                                     const FactorMatrix& source_factors,
                                     const FactorMatrix& target_factors,
                                     const SparsityProfile& p);

/// The <= k common entities most cosine-similar to e in the target factor
/// space. Only strictly positive similarities qualify; ties break on id.
NeighborSet topk_similar(const std::string& e,
                         const FactorMatrix& target_factors,
                         const std::set<std::string>& commons, int k);

/// Fills beta = sn_source / (n_target + sn_source) from the neighbors'
/// source-side rating counts (beta = 0 with no neighbors).
NeighborSet sparsity_different(const std::string& e, const RatingDataset& tgt,
                               NeighborSet ns, const RatingDataset& src,
                               EntityKind kind);

/// (1 - beta) * U_t[e] + beta * SU, where SU is the similarity-weighted
/// mean of the neighbors' source factors. No neighbors: returns U_t[e].
std::vector<double> benchmark_different(const std::string& e,
                                        const FactorMatrix& target_factors,
                                        const FactorMatrix& source_factors,
                                        const NeighborSet& ns);

/// Disjoint union of the common and different benchmark vectors.
FactorMatrix assemble_benchmark(
    const std::map<std::string, std::vector<double>>& commons,
    const std::map<std::string, std::vector<double>>& differents);

/// Full benchmark generation for one entity kind: every entity of
/// target_factors gets a vector, common entities via the alpha blend and
/// different entities via their top-k neighbor blend.
FactorMatrix build_benchmark(const FactorMatrix& source_factors,
                             const FactorMatrix& target_factors,
                             const RatingDataset& src, const RatingDataset& tgt,
                             EntityKind kind, int k);

/// Per-entity diagnostics: id, kind, counts, alpha/beta, neighbors.
void write_sparsity_csv(const std::string& path,
                        const FactorMatrix& source_factors,
                        const FactorMatrix& target_factors,
                        const RatingDataset& src, const RatingDataset& tgt,
                        EntityKind kind, int k);

}  // namespace dcdcsr
