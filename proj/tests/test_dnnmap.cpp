#include <doctest.h>

#include <cmath>

#include "dcdcsr/dnnmap.hpp"
#include "dcdcsr/rng.hpp"
#include "helpers.hpp"

using namespace dcdcsr;

namespace {

FactorMatrix random_matrix(int n, int K, Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  FactorMatrix m(K);
  std::vector<double> buf(K);
  for (int e = 0; e < n; ++e) {
    for (auto& x : buf) x = rng.uniform(lo, hi);
    m.insert("e" + std::to_string(e), buf);
  }
  return m;
}

FactorMatrix column(std::vector<double> values) {
  FactorMatrix m(1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m.insert("e" + std::to_string(i), std::vector<double>{values[i]});
  }
  return m;
}

}  // namespace

TEST_CASE("fit_norm finds per-dimension extremes") {
  auto m = column({1.0, 3.0, 5.0});
  auto p = fit_norm(m);
  CHECK(p.ranges[0].first == 1.0);
  CHECK(p.ranges[0].second == 5.0);

  auto single = column({2.0});
  auto ps = fit_norm(single);
  CHECK(ps.ranges[0].first == 2.0);
  CHECK(ps.ranges[0].second == 2.0);
}

TEST_CASE("normalize maps extremes to -1/1 and midpoints to 0") {
  auto m = column({1.0, 3.0, 5.0});
  auto p = fit_norm(m);
  auto n = normalize(m, p);
  CHECK(n.row("e0")[0] == doctest::Approx(-1.0));
  CHECK(n.row("e1")[0] == doctest::Approx(0.0));
  CHECK(n.row("e2")[0] == doctest::Approx(1.0));
}

TEST_CASE("normalize sends degenerate dimensions to 0") {
  auto m = column({2.0, 2.0});
  auto n = normalize(m, fit_norm(m));
  CHECK(n.row("e0")[0] == 0.0);
  CHECK(n.row("e1")[0] == 0.0);
}

TEST_CASE("normalize extrapolates outside the fitted range") {
  auto fit_on = column({0.0, 2.0});
  auto p = fit_norm(fit_on);
  auto other = column({4.0});
  auto n = normalize(other, p);
  CHECK(n.row("e0")[0] == doctest::Approx(3.0));  // linear, not clipped
}

TEST_CASE("denormalize inverts normalize") {
  auto m = column({1.0, 3.0, 5.0});
  auto p = fit_norm(m);
  auto rt = denormalize(normalize(m, p), p);
  for (const auto& id : m.ids()) {
    CHECK(std::abs(rt.row(id)[0] - m.row(id)[0]) < 1e-9);
  }

  FactorMatrix y(1);
  y.insert("a", std::vector<double>{1.0});
  y.insert("b", std::vector<double>{0.0});
  auto back = denormalize(y, p);
  CHECK(back.row("a")[0] == doctest::Approx(5.0));  // y=1 -> max
  CHECK(back.row("b")[0] == doctest::Approx(3.0));  // y=0 -> midpoint
}

TEST_CASE("roundtrip holds on random matrices with degenerate dimensions") {
  Rng rng(404);
  for (int t = 0; t < 100; ++t) {
    int K = 1 + static_cast<int>(rng.index(6));
    int n = 1 + static_cast<int>(rng.index(12));
    FactorMatrix m(K);
    std::vector<double> buf(K);
    double constant = rng.uniform(-3.0, 3.0);
    for (int e = 0; e < n; ++e) {
      for (int c = 0; c < K; ++c) {
        // dimension 0 is constant across entities
        buf[c] = c == 0 ? constant : rng.uniform(-50.0, 50.0);
      }
      m.insert("e" + std::to_string(e), buf);
    }
    auto p = fit_norm(m);
    auto rt = denormalize(normalize(m, p), p);
    for (const auto& id : m.ids()) {
      auto a = m.row(id);
      auto b = rt.row(id);
      for (int c = 0; c < K; ++c) CHECK(std::abs(a[c] - b[c]) < 1e-9);
    }
  }
}

TEST_CASE("init_network builds the 1.5K-wide tower") {
  auto net = init_network(10, 5, 42);
  CHECK(net.widths == std::vector<int>{10, 15, 15, 15, 15, 10});
  CHECK(net.weights.size() == 5);
  double bound = 1.0 / std::sqrt(20.0);
  for (const auto& layer : net.weights) {
    for (double w : layer) {
      CHECK(std::abs(w) <= bound);
    }
  }
  for (const auto& layer : net.biases) {
    for (double b : layer) CHECK(b == 0.0);
  }
}

TEST_CASE("init_network is deterministic per seed") {
  auto a = init_network(6, 3, 1234);
  auto b = init_network(6, 3, 1234);
  CHECK(a.weights == b.weights);
  auto c = init_network(6, 3, 1235);
  CHECK(a.weights != c.weights);
}

TEST_CASE("forward of the zero network is zero") {
  auto net = init_network(4, 2, 9);
  for (auto& layer : net.weights) std::fill(layer.begin(), layer.end(), 0.0);
  auto y = forward(net, std::vector<double>{0.3, -0.1, 0.9, 0.0});
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("single identity layer is odd") {
  MappingNetwork net;
  net.dim = 2;
  net.depth = 1;
  net.widths = {2, 2};
  net.weights = {{1.0, 0.0, 0.0, 1.0}};
  net.biases = {{0.0, 0.0}};
  std::vector<double> x{0.7, -0.2};
  auto y1 = forward(net, x);
  for (auto& v : x) v = -v;
  auto y2 = forward(net, x);
  CHECK(y1[0] == doctest::Approx(-y2[0]));
  CHECK(y1[1] == doctest::Approx(-y2[1]));
}

TEST_CASE("forward outputs stay strictly inside (-1, 1)") {
  Rng rng(5150);
  auto net = init_network(5, 4, 77);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-100.0, 100.0);
    for (double v : forward(net, x)) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("backprop matches central finite differences") {
  Rng rng(31);
  int checks = 0;
  for (int probe = 0; probe < 12; ++probe) {
    int K = 2 + static_cast<int>(rng.index(5));   // K <= 6
    int d = 1 + static_cast<int>(rng.index(3));   // d <= 3
    auto net = init_network(K, d, 1000 + probe);
    int batch = 1 + static_cast<int>(rng.index(4));
    std::vector<std::vector<double>> xs(batch), ys(batch);
    for (int b = 0; b < batch; ++b) {
      xs[b].resize(K);
      ys[b].resize(K);
      for (auto& v : xs[b]) v = rng.uniform(-1.0, 1.0);
      for (auto& v : ys[b]) v = rng.uniform(-1.0, 1.0);
    }
    MappingNetwork grad;
    mapping_batch_gradient(net, xs, ys, &grad);

    const double step = 1e-5;
    for (int rep = 0; rep < 12; ++rep) {
      int layer = static_cast<int>(rng.index(d));
      bool weight = rng.index(2) == 0;
      auto& params = weight ? net.weights[layer] : net.biases[layer];
      auto& grads = weight ? grad.weights[layer] : grad.biases[layer];
      std::size_t idx = rng.index(params.size());
      double saved = params[idx];
      params[idx] = saved + step;
      double up = mapping_batch_loss(net, xs, ys);
      params[idx] = saved - step;
      double down = mapping_batch_loss(net, xs, ys);
      params[idx] = saved;
      double fd = (up - down) / (2 * step);
      CHECK(std::abs(grads[idx] - fd) / (std::abs(grads[idx]) + 1e-8) < 1e-4);
      ++checks;
    }
  }
  CHECK(checks >= 100);
}

TEST_CASE("tiny full-batch descent decreases the loss monotonically") {
  Rng rng(88);
  int K = 3;
  auto net = init_network(K, 2, 55);
  std::vector<std::vector<double>> xs(6), ys(6);
  for (auto& v : xs) {
    v.resize(K);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  }
  for (auto& v : ys) {
    v.resize(K);
    for (auto& y : v) y = rng.uniform(-0.5, 0.5);
  }
  double prev = mapping_batch_loss(net, xs, ys);
  MappingNetwork grad;
  for (int step = 0; step < 50; ++step) {
    mapping_batch_gradient(net, xs, ys, &grad);
    for (int j = 0; j < net.depth; ++j) {
      for (std::size_t t = 0; t < net.weights[j].size(); ++t) {
        net.weights[j][t] -= 1e-4 * grad.weights[j][t];
      }
      for (std::size_t t = 0; t < net.biases[j].size(); ++t) {
        net.biases[j][t] -= 1e-4 * grad.biases[j][t];
      }
    }
    double cur = mapping_batch_loss(net, xs, ys);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("train_mapping with zero epochs returns the initial net") {
  Rng rng(6);
  auto inputs = random_matrix(20, 4, rng);
  auto net = init_network(4, 2, 3);
  MapTrainConfig cfg;
  cfg.max_epochs = 0;
  auto out = train_mapping(net, inputs, inputs, cfg);
  CHECK(out.weights == net.weights);
  CHECK(out.biases == net.biases);
}

TEST_CASE("train_mapping fits the identity on 200 entities") {
  Rng rng(17);
  auto inputs = random_matrix(200, 10, rng, -0.9, 0.9);
  auto net = init_network(10, 5, 23);
  MapTrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.seed = 29;
  std::vector<double> curve;
  auto out = train_mapping(net, inputs, inputs, cfg, &curve);
  REQUIRE(curve.size() >= 2);
  CHECK(curve.back() <= curve.front());

  std::vector<std::vector<double>> xs, ys;
  for (const auto& id : inputs.ids()) {
    auto row = inputs.row(id);
    xs.emplace_back(row.begin(), row.end());
    ys.emplace_back(row.begin(), row.end());
  }
  CHECK(mapping_batch_loss(out, xs, ys) < 1e-2);
}

TEST_CASE("train_mapping is deterministic") {
  Rng rng(91);
  auto inputs = random_matrix(40, 4, rng);
  auto targets = random_matrix(40, 4, rng, -0.8, 0.8);
  auto net = init_network(4, 3, 62);
  MapTrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.seed = 13;
  auto a = train_mapping(net, inputs, targets, cfg);
  auto b = train_mapping(net, inputs, targets, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.biases == b.biases);
}

TEST_CASE("train_mapping rejects mismatched key sets") {
  Rng rng(14);
  auto inputs = random_matrix(5, 3, rng);
  auto targets = random_matrix(4, 3, rng);
  auto net = init_network(3, 2, 1);
  MapTrainConfig cfg;
  CHECK_THROWS_AS(train_mapping(net, inputs, targets, cfg),
                  std::runtime_error);
}

TEST_CASE("apply_mapping preserves the key set and stays finite") {
  Rng rng(300);
  auto m = random_matrix(30, 4, rng, -5.0, 5.0);
  auto norm_in = fit_norm(m);
  auto net = init_network(4, 3, 8);
  auto out = apply_mapping(net, m, norm_in, norm_in);
  CHECK(out.size() == m.size());
  for (const auto& id : m.ids()) {
    CHECK(out.contains(id));
    for (double v : out.row(id)) CHECK(std::isfinite(v));
  }
}

TEST_CASE("a trained identity map reproduces its inputs through apply") {
  Rng rng(21);
  auto m = random_matrix(150, 6, rng, -2.0, 2.0);
  auto p = fit_norm(m);
  auto normed = normalize(m, p);
  auto net = init_network(6, 3, 99);
  MapTrainConfig cfg;
  cfg.max_epochs = 250;
  cfg.seed = 5;
  auto trained = train_mapping(net, normed, normed, cfg);
  auto mapped = apply_mapping(trained, m, p, p);
  double worst = 0.0;
  for (const auto& id : m.ids()) {
    auto a = m.row(id);
    auto b = mapped.row(id);
    for (int c = 0; c < m.dim(); ++c) {
      worst = std::max(worst, std::abs(a[c] - b[c]));
    }
  }
  CHECK(worst < 0.5);  // identity fit is approximate, not exact
}
