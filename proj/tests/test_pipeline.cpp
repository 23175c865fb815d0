#include <doctest.h>

#include <cmath>

#include "dcdcsr/pipeline.hpp"
#include "helpers.hpp"
#include "synthetic.hpp"

using namespace dcdcsr;
using testutil::make_dataset;

namespace {

PipelineConfig fast_config(Task task, std::uint64_t seed = 42) {
  PipelineConfig cfg;
  cfg.task = task;
  cfg.mf.dim = 4;
  cfg.mf.epochs = 30;
  cfg.map.max_epochs = 40;
  cfg.d_layers = 3;
  cfg.seed = seed;
  return cfg;
}

testutil::SyntheticSpec small_spec(Task task) {
  testutil::SyntheticSpec spec;
  spec.task = task;
  spec.n_target_users = 60;
  spec.common_fraction = 0.5;
  spec.source_ratings_per_entity = 12;
  spec.target_ratings_per_entity = 4;
  spec.n_source_items = 40;
  spec.n_target_items = 30;
  spec.seed = 9;
  return spec;
}

}  // namespace

TEST_CASE("identical datasets give the all-means benchmark") {
  auto pair = testutil::make_transfer_pair(small_spec(Task::CDR));
  const auto& d = pair.target;  // same dataset on both sides
  auto cfg = fast_config(Task::CDR);
  auto res = run_pipeline(d, d, cfg);

  // alpha_source = alpha_target = 0.5 for every user, so the benchmark is
  // exactly the mean of the two independently trained user matrices
  for (const auto& id : res.benchmark.ids()) {
    auto us = res.source_model.users.row(id);
    auto ut = res.target_model.users.row(id);
    auto b = res.benchmark.row(id);
    for (int c = 0; c < res.benchmark.dim(); ++c) {
      CHECK(b[c] == doctest::Approx(0.5 * us[c] + 0.5 * ut[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pipeline rejects pairs without common entities") {
  auto a = make_dataset({{"u1", "i1", 4, 1}, {"u1", "i2", 3, 2}});
  auto b = make_dataset({{"u9", "i9", 4, 1}, {"u9", "i8", 3, 2}});
  CHECK_THROWS_WITH_AS(run_pipeline(a, b, fast_config(Task::CDR)),
                       doctest::Contains("no common entities"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(run_pipeline(a, b, fast_config(Task::CSR)),
                       doctest::Contains("no common entities"),
                       std::runtime_error);
}

TEST_CASE("CDR maps users and only phase 3 touches items") {
  auto pair = testutil::make_transfer_pair(small_spec(Task::CDR));
  auto res = run_pipeline(pair.source, pair.target, fast_config(Task::CDR));

  // the mapped side is frozen through phase 3
  CHECK(res.model.users == res.mapped);
  // items were retrained, starting from the phase-1 target factors
  CHECK(!(res.model.items == res.target_model.items));
  // coverage: every target entity kept a vector
  CHECK(res.model.users.size() == res.target_model.users.size());
  CHECK(res.benchmark.size() == res.target_model.users.size());
  CHECK(res.mapped.size() == res.target_model.users.size());
}

TEST_CASE("CSR maps items and retrains users") {
  auto pair = testutil::make_transfer_pair(small_spec(Task::CSR));
  auto res = run_pipeline(pair.source, pair.target, fast_config(Task::CSR));
  CHECK(res.model.items == res.mapped);
  CHECK(!(res.model.users == res.target_model.users));
  CHECK(res.benchmark.size() == res.target_model.items.size());
}

TEST_CASE("pipeline is deterministic end to end") {
  auto pair = testutil::make_transfer_pair(small_spec(Task::CDR));
  auto cfg = fast_config(Task::CDR, 77);
  auto a = run_pipeline(pair.source, pair.target, cfg);
  auto b = run_pipeline(pair.source, pair.target, cfg);
  CHECK(a.model.users == b.model.users);
  CHECK(a.model.items == b.model.items);
  CHECK(a.benchmark == b.benchmark);
  CHECK(a.network.weights == b.network.weights);

  auto user = pair.target.users().id_of(0);
  auto ra = recommend(a, user, pair.target, 5);
  auto rb = recommend(b, user, pair.target, 5);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].first == rb[i].first);
    CHECK(ra[i].second == rb[i].second);
  }
}

TEST_CASE("recommend skips rated items and breaks ties by id") {
  PipelineResult res;
  res.model.config.model = MfModelKind::PMF;
  res.model.config.dim = 1;
  res.model.scale = {1, 5};
  res.model.global_mean = 3.0;
  res.model.users = FactorMatrix(1);
  res.model.items = FactorMatrix(1);
  res.model.users.insert("u", std::vector<double>{0.0});
  for (auto id : {"a", "c", "b"}) {
    res.model.items.insert(id, std::vector<double>{0.0});
  }
  auto train = make_dataset({{"u", "a", 4, 1}, {"v", "b", 3, 2},
                             {"v", "c", 3, 3}});

  // all predictions tie at the clamped floor, so order is b then c
  auto recs = recommend(res, "u", train, 10);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].first == "b");
  CHECK(recs[1].first == "c");

  // n truncates
  CHECK(recommend(res, "u", train, 1).size() == 1);

  // unknown user -> empty
  CHECK(recommend(res, "nobody", train, 3).empty());
}

TEST_CASE("recommend returns empty when the user rated everything") {
  PipelineResult res;
  res.model.config.model = MfModelKind::PMF;
  res.model.config.dim = 1;
  res.model.scale = {1, 5};
  res.model.users = FactorMatrix(1);
  res.model.items = FactorMatrix(1);
  res.model.users.insert("u", std::vector<double>{1.0});
  res.model.items.insert("a", std::vector<double>{1.0});
  auto train = make_dataset({{"u", "a", 4, 1}, {"u", "a", 5, 2}});
  CHECK(recommend(res, "u", train, 5).empty());
}

TEST_CASE("transfer beats the target-only factors on planted data") {
  // small-scale version of the planted-factor benchmark
  auto spec = small_spec(Task::CDR);
  spec.n_target_users = 150;
  spec.source_ratings_per_entity = 25;
  spec.seed = 5;
  auto pair = testutil::make_transfer_pair(spec);
  auto [train_d, test_d] = chronological_split(pair.target, 0.8);

  PipelineConfig cfg = fast_config(Task::CDR, 3);
  cfg.mf.dim = 6;
  cfg.mf.epochs = 60;
  cfg.map.max_epochs = 120;
  auto res = run_pipeline(pair.source, train_d, cfg);

  MfConfig tgt_cfg = cfg.mf;
  tgt_cfg.seed = derive_seed(cfg.seed, "mf-target");
  auto baseline = train(train_d, tgt_cfg);

  auto rmse = [&](const MfModel& m) {
    double sq = 0.0;
    for (const auto& t : test_d.triples()) {
      double e = predict(m, t.user, t.item) - t.rating;
      sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(test_d.size()));
  };
  CHECK(rmse(res.model) < rmse(baseline));
}
