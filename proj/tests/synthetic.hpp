#pragma once

// Planted-factor synthetic data: common entities share their true latent
// vector across the two datasets, so transferring source knowledge is
// genuinely informative and the generator doubles as a test oracle.

#include <algorithm>
#include <string>
#include <vector>

#include "dcdcsr/core.hpp"
#include "dcdcsr/pipeline.hpp"
#include "dcdcsr/rng.hpp"

namespace testutil {

struct SyntheticSpec {
  dcdcsr::Task task = dcdcsr::Task::CDR;
  int n_target_users = 1000;
  double common_fraction = 0.6;
  int source_ratings_per_entity = 50;
  int target_ratings_per_entity = 5;
  int n_source_items = 300;
  int n_target_items = 200;
  int k_true = 4;
  double noise = 0.3;
  dcdcsr::RatingScale scale{1, 5};
  std::uint64_t seed = 1;
};

struct SyntheticPair {
  dcdcsr::RatingDataset source;
  dcdcsr::RatingDataset target;
};

namespace detail {

inline std::vector<double> planted_vector(dcdcsr::Rng& rng, int k) {
  std::vector<double> v(k);
  for (auto& x : v) x = rng.uniform(-1.1, 1.1);
  return v;
}

inline double planted_rating(const std::vector<double>& u,
                             const std::vector<double>& v, double noise,
                             dcdcsr::RatingScale scale, dcdcsr::Rng& rng) {
  double x = 3.0;
  for (std::size_t k = 0; k < u.size(); ++k) x += u[k] * v[k];
  x += rng.normal(0.0, noise);
  return std::clamp(x, scale.min, scale.max);
}

}  // namespace detail

// Builds a (source, target) dataset pair for CDR: the target users exist in
// both domains for the common fraction, items are disjoint. For CSR the
// roles swap: items are shared, user populations are disjoint.
inline SyntheticPair make_transfer_pair(const SyntheticSpec& spec) {
  using namespace dcdcsr;
  Rng rng(spec.seed);

  int n_common = static_cast<int>(spec.common_fraction * spec.n_target_users);

  // "linking" entities are users for CDR, items for CSR
  std::vector<std::vector<double>> link_factors(spec.n_target_users);
  for (auto& v : link_factors) v = detail::planted_vector(rng, spec.k_true);

  std::vector<std::vector<double>> src_other(spec.n_source_items);
  for (auto& v : src_other) v = detail::planted_vector(rng, spec.k_true);
  std::vector<std::vector<double>> tgt_other(spec.n_target_items);
  for (auto& v : tgt_other) v = detail::planted_vector(rng, spec.k_true);

  auto link_name = [&](int e) {
    return (spec.task == Task::CDR ? "u" : "it") + std::to_string(e);
  };
  auto src_other_name = [&](int e) {
    return (spec.task == Task::CDR ? "s_it" : "s_u") + std::to_string(e);
  };
  auto tgt_other_name = [&](int e) {
    return (spec.task == Task::CDR ? "t_it" : "t_u") + std::to_string(e);
  };

  std::int64_t ts = 0;
  auto emit = [&](std::vector<RatingTriple>& out, const std::string& link_id,
                  const std::string& other_id,
                  const std::vector<double>& link_vec,
                  const std::vector<double>& other_vec) {
    double r = detail::planted_rating(link_vec, other_vec, spec.noise,
                                      spec.scale, rng);
    if (spec.task == Task::CDR) {
      out.push_back({link_id, other_id, r, ++ts});
    } else {
      out.push_back({other_id, link_id, r, ++ts});
    }
  };

  // source: the common linking entities, densely rated
  std::vector<RatingTriple> src_triples;
  std::vector<int> other_pool(spec.n_source_items);
  for (int i = 0; i < spec.n_source_items; ++i) other_pool[i] = i;
  for (int e = 0; e < n_common; ++e) {
    rng.shuffle(other_pool);
    int n = std::min(spec.source_ratings_per_entity, spec.n_source_items);
    for (int c = 0; c < n; ++c) {
      emit(src_triples, link_name(e), src_other_name(other_pool[c]),
           link_factors[e], src_other[other_pool[c]]);
    }
  }

  // target: every linking entity, sparsely rated
  std::vector<RatingTriple> tgt_triples;
  std::vector<int> tgt_pool(spec.n_target_items);
  for (int i = 0; i < spec.n_target_items; ++i) tgt_pool[i] = i;
  for (int e = 0; e < spec.n_target_users; ++e) {
    rng.shuffle(tgt_pool);
    int n = std::min(spec.target_ratings_per_entity, spec.n_target_items);
    for (int c = 0; c < n; ++c) {
      emit(tgt_triples, link_name(e), tgt_other_name(tgt_pool[c]),
           link_factors[e], tgt_other[tgt_pool[c]]);
    }
  }

  SyntheticPair pair;
  pair.source = RatingDataset::from_triples(std::move(src_triples), spec.scale);
  pair.target = RatingDataset::from_triples(std::move(tgt_triples), spec.scale);
  return pair;
}

}  // namespace testutil
