#include "dcdcsr/mf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dcdcsr/rng.hpp"
#include "dcdcsr/vecmath.hpp"

namespace dcdcsr {

std::string to_string(MfModelKind kind) {
  switch (kind) {
    case MfModelKind::PMF: return "pmf";
    case MfModelKind::MMMF: return "mmmf";
    case MfModelKind::BPR: return "bpr";
  }
  return "?";
}

MfModelKind mf_kind_from_string(const std::string& s) {
  if (s == "pmf") return MfModelKind::PMF;
  if (s == "mmmf") return MfModelKind::MMMF;
  if (s == "bpr") return MfModelKind::BPR;
  throw std::runtime_error("unknown MF model '" + s + "' (pmf|mmmf|bpr)");
}

double pmf_rating_loss(std::span<const double> u, std::span<const double> v,
                       double r, double lambda) {
  double e = r - dot(u, v);
  return e * e + lambda * (squared_norm(u) + squared_norm(v));
}

void pmf_rating_gradient(std::span<const double> u, std::span<const double> v,
                         double r, double lambda, std::span<double> gu,
                         std::span<double> gv) {
  double e = r - dot(u, v);
  for (std::size_t k = 0; k < u.size(); ++k) {
    gu[k] = -2.0 * e * v[k] + 2.0 * lambda * u[k];
    gv[k] = -2.0 * e * u[k] + 2.0 * lambda * v[k];
  }
}

namespace {

// Smooth hinge: h(z) = (1-z)^2/2 for z < 1, else 0.
double hinge(double z) { return z < 1.0 ? 0.5 * (1.0 - z) * (1.0 - z) : 0.0; }
double hinge_deriv(double z) { return z < 1.0 ? z - 1.0 : 0.0; }

double softplus(double x) {
  // log(1 + e^x), overflow-safe
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

struct Obs {
  std::size_t u;
  std::size_t i;
  double r;
};

// Dense training workspace: only entities with at least one rating in the
// dataset get rows, ordered by the dataset's dense index.
struct Workspace {
  int K = 0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<double> U;
  std::vector<double> V;
  std::vector<Obs> obs;
  std::vector<double> levels;
  std::vector<double> theta;  // user-major, (levels-1) per user
  std::vector<std::vector<std::pair<std::size_t, double>>> by_user;

  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_items() const { return item_ids.size(); }
  std::size_t thresholds_per_user() const {
    return levels.size() > 1 ? levels.size() - 1 : 0;
  }
  std::span<double> urow(std::size_t u) {
    return {U.data() + u * static_cast<std::size_t>(K),
            static_cast<std::size_t>(K)};
  }
  std::span<double> vrow(std::size_t i) {
    return {V.data() + i * static_cast<std::size_t>(K),
            static_cast<std::size_t>(K)};
  }
  std::span<double> trow(std::size_t u) {
    std::size_t t = thresholds_per_user();
    return {theta.data() + u * t, t};
  }
};

std::vector<double> derive_levels(const RatingDataset& d) {
  std::vector<double> values;
  values.reserve(d.size());
  for (const auto& t : d.triples()) values.push_back(t.rating);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() <= 25) return values;
  // Too many distinct values: bin to 5 uniform levels over the scale.
  std::vector<double> levels(5);
  double lo = d.scale().min, hi = d.scale().max;
  for (int i = 0; i < 5; ++i) {
    levels[i] = lo + (i + 0.5) * (hi - lo) / 5.0;
  }
  return levels;
}

std::size_t level_of(const std::vector<double>& levels, double r) {
  auto it = std::lower_bound(levels.begin(), levels.end(), r);
  if (it == levels.end()) return levels.size() - 1;
  if (it == levels.begin()) return 0;
  std::size_t hi = static_cast<std::size_t>(it - levels.begin());
  return (r - levels[hi - 1] <= levels[hi] - r) ? hi - 1 : hi;
}

Workspace build_workspace(const RatingDataset& d, int K) {
  Workspace ws;
  ws.K = K;
  std::unordered_map<std::string, std::size_t> urow, irow;
  for (const auto& id : d.users().ids()) {
    if (d.rating_count(id, EntityKind::User) > 0) {
      urow.emplace(id, ws.user_ids.size());
      ws.user_ids.push_back(id);
    }
  }
  for (const auto& id : d.items().ids()) {
    if (d.rating_count(id, EntityKind::Item) > 0) {
      irow.emplace(id, ws.item_ids.size());
      ws.item_ids.push_back(id);
    }
  }
  ws.obs.reserve(d.size());
  for (const auto& t : d.triples()) {
    ws.obs.push_back({urow.at(t.user), irow.at(t.item), t.rating});
  }
  ws.by_user.resize(ws.n_users());
  for (const auto& o : ws.obs) ws.by_user[o.u].emplace_back(o.i, o.r);
  return ws;
}

void init_factors(Workspace& ws, const MfConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "init"));
  ws.U.resize(ws.n_users() * static_cast<std::size_t>(ws.K));
  ws.V.resize(ws.n_items() * static_cast<std::size_t>(ws.K));
  for (auto& x : ws.U) x = rng.normal(0.0, cfg.init_scale);
  for (auto& x : ws.V) x = rng.normal(0.0, cfg.init_scale);
}

void init_thresholds(Workspace& ws) {
  std::size_t t = ws.thresholds_per_user();
  ws.theta.resize(ws.n_users() * t);
  for (std::size_t u = 0; u < ws.n_users(); ++u) {
    auto row = ws.trow(u);
    for (std::size_t k = 0; k < t; ++k) {
      row[k] = 0.5 * (ws.levels[k] + ws.levels[k + 1]);
    }
  }
}

// Keeps thresholds non-decreasing after an update.
void project_sorted(std::span<double> theta) {
  for (std::size_t k = 1; k < theta.size(); ++k) {
    theta[k] = std::max(theta[k], theta[k - 1]);
  }
}

struct TrainOpts {
  bool upd_users = true;
  bool upd_items = true;
  int epochs = 0;
  std::uint64_t seed = 0;
};

void check_finite(double loss) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error(
        "training diverged: non-finite objective (lower the learning rate)");
  }
}

void run_pmf_sgd(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  Rng rng(derive_seed(opt.seed, "shuffle"));
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<std::size_t> order(ws.obs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ubuf(ws.K);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double loss = 0.0;
    for (std::size_t idx : order) {
      const Obs& o = ws.obs[idx];
      auto u = ws.urow(o.u);
      auto v = ws.vrow(o.i);
      double e = o.r - dot(u, v);
      loss += e * e;
      std::copy(u.begin(), u.end(), ubuf.begin());
      if (opt.upd_users) {
        for (int k = 0; k < ws.K; ++k) {
          u[k] -= lr * (-2.0 * e * v[k] + 2.0 * lam * u[k]);
        }
      }
      if (opt.upd_items) {
        for (int k = 0; k < ws.K; ++k) {
          v[k] -= lr * (-2.0 * e * ubuf[k] + 2.0 * lam * v[k]);
        }
      }
    }
    check_finite(loss);
  }
}

void run_pmf_full(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<double> gU(ws.U.size()), gV(ws.V.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t j = 0; j < ws.U.size(); ++j) gU[j] = 2.0 * lam * ws.U[j];
    for (std::size_t j = 0; j < ws.V.size(); ++j) gV[j] = 2.0 * lam * ws.V[j];
    double loss = 0.0;
    for (const Obs& o : ws.obs) {
      auto u = ws.urow(o.u);
      auto v = ws.vrow(o.i);
      double e = o.r - dot(u, v);
      loss += e * e;
      for (int k = 0; k < ws.K; ++k) {
        gU[o.u * ws.K + k] += -2.0 * e * v[k];
        gV[o.i * ws.K + k] += -2.0 * e * u[k];
      }
    }
    check_finite(loss);
    if (opt.upd_users) {
      for (std::size_t j = 0; j < ws.U.size(); ++j) ws.U[j] -= lr * gU[j];
    }
    if (opt.upd_items) {
      for (std::size_t j = 0; j < ws.V.size(); ++j) ws.V[j] -= lr * gV[j];
    }
  }
}

// Per-rating MMMF terms: sum_k h(T_k (theta_k - x)) with T_k = +1 for
// thresholds at or above the rating's level, -1 below it.
double mmmf_terms(std::span<const double> theta, std::size_t level, double x,
                  std::span<double> gtheta, double* gx) {
  double loss = 0.0;
  *gx = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double T = k >= level ? 1.0 : -1.0;
    double z = T * (theta[k] - x);
    loss += hinge(z);
    double dh = hinge_deriv(z);
    gtheta[k] = dh * T;
    *gx += -dh * T;
  }
  return loss;
}

void run_mmmf_sgd(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  Rng rng(derive_seed(opt.seed, "shuffle"));
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<std::size_t> order(ws.obs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ubuf(ws.K), gtheta(ws.thresholds_per_user());
  std::vector<std::size_t> level(ws.obs.size());
  for (std::size_t j = 0; j < ws.obs.size(); ++j) {
    level[j] = level_of(ws.levels, ws.obs[j].r);
  }
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double loss = 0.0;
    for (std::size_t idx : order) {
      const Obs& o = ws.obs[idx];
      auto u = ws.urow(o.u);
      auto v = ws.vrow(o.i);
      auto th = ws.trow(o.u);
      double gx = 0.0;
      loss += mmmf_terms(th, level[idx], dot(u, v), gtheta, &gx);
      std::copy(u.begin(), u.end(), ubuf.begin());
      if (opt.upd_users) {
        for (int k = 0; k < ws.K; ++k) {
          u[k] -= lr * (gx * v[k] + 2.0 * lam * u[k]);
        }
        for (std::size_t k = 0; k < th.size(); ++k) th[k] -= lr * gtheta[k];
        project_sorted(th);
      }
      if (opt.upd_items) {
        for (int k = 0; k < ws.K; ++k) {
          v[k] -= lr * (gx * ubuf[k] + 2.0 * lam * v[k]);
        }
      }
    }
    check_finite(loss);
  }
}

void run_mmmf_full(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<double> gU(ws.U.size()), gV(ws.V.size()), gT(ws.theta.size());
  std::vector<double> gtheta(ws.thresholds_per_user());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t j = 0; j < ws.U.size(); ++j) gU[j] = 2.0 * lam * ws.U[j];
    for (std::size_t j = 0; j < ws.V.size(); ++j) gV[j] = 2.0 * lam * ws.V[j];
    std::fill(gT.begin(), gT.end(), 0.0);
    double loss = 0.0;
    for (const Obs& o : ws.obs) {
      auto u = ws.urow(o.u);
      auto v = ws.vrow(o.i);
      double gx = 0.0;
      loss += mmmf_terms(ws.trow(o.u), level_of(ws.levels, o.r), dot(u, v),
                         gtheta, &gx);
      for (int k = 0; k < ws.K; ++k) {
        gU[o.u * ws.K + k] += gx * v[k];
        gV[o.i * ws.K + k] += gx * u[k];
      }
      std::size_t t = ws.thresholds_per_user();
      for (std::size_t k = 0; k < t; ++k) gT[o.u * t + k] += gtheta[k];
    }
    check_finite(loss);
    if (opt.upd_users) {
      for (std::size_t j = 0; j < ws.U.size(); ++j) ws.U[j] -= lr * gU[j];
      for (std::size_t j = 0; j < ws.theta.size(); ++j) {
        ws.theta[j] -= lr * gT[j];
      }
      for (std::size_t u = 0; u < ws.n_users(); ++u) {
        project_sorted(ws.trow(u));
      }
    }
    if (opt.upd_items) {
      for (std::size_t j = 0; j < ws.V.size(); ++j) ws.V[j] -= lr * gV[j];
    }
  }
}

// Per-user entries sorted by rating value so a "different value" partner
// can be sampled in O(1) from the complement of the equal-value run.
struct BprSampler {
  struct UserEntries {
    std::vector<std::pair<double, std::size_t>> entries;  // (rating, item row)
    std::vector<std::pair<std::size_t, std::size_t>> run;  // equal-value span
  };
  std::vector<UserEntries> users;
  std::vector<std::size_t> rankable;

  explicit BprSampler(const Workspace& ws) {
    users.resize(ws.n_users());
    for (std::size_t u = 0; u < ws.n_users(); ++u) {
      auto& ue = users[u];
      for (const auto& [item, r] : ws.by_user[u]) ue.entries.emplace_back(r, item);
      std::sort(ue.entries.begin(), ue.entries.end());
      ue.run.resize(ue.entries.size());
      std::size_t a = 0;
      while (a < ue.entries.size()) {
        std::size_t b = a;
        while (b < ue.entries.size() &&
               ue.entries[b].first == ue.entries[a].first) {
          ++b;
        }
        for (std::size_t t = a; t < b; ++t) ue.run[t] = {a, b};
        a = b;
      }
      if (!ue.entries.empty() &&
          ue.entries.front().first != ue.entries.back().first) {
        rankable.push_back(u);
      }
    }
  }

  // Draws (user, higher item, lower item) with distinct rating values.
  void sample(Rng& rng, std::size_t* u, std::size_t* hi_item,
              std::size_t* lo_item) const {
    *u = rankable[rng.index(rankable.size())];
    const auto& ue = users[*u];
    std::size_t a = rng.index(ue.entries.size());
    auto [lo, hi] = ue.run[a];
    std::size_t t = rng.index(ue.entries.size() - (hi - lo));
    std::size_t b = t < lo ? t : t + (hi - lo);
    if (ue.entries[a].first > ue.entries[b].first) {
      *hi_item = ue.entries[a].second;
      *lo_item = ue.entries[b].second;
    } else {
      *hi_item = ue.entries[b].second;
      *lo_item = ue.entries[a].second;
    }
  }
};

template <class F>
void for_each_rankable_pair(const Workspace& ws, F&& f) {
  for (std::size_t u = 0; u < ws.n_users(); ++u) {
    const auto& entries = ws.by_user[u];
    for (std::size_t a = 0; a < entries.size(); ++a) {
      for (std::size_t b = a + 1; b < entries.size(); ++b) {
        if (entries[a].second > entries[b].second) {
          f(u, entries[a].first, entries[b].first);
        } else if (entries[b].second > entries[a].second) {
          f(u, entries[b].first, entries[a].first);
        }
      }
    }
  }
}

void run_bpr_sgd(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  BprSampler sampler(ws);
  if (sampler.rankable.empty()) {
    throw std::runtime_error("BPR: no rankable pairs (every user rated all "
                             "their items with a single value)");
  }
  Rng rng(derive_seed(opt.seed, "pairs"));
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<double> ubuf(ws.K);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double loss = 0.0;
    for (std::size_t t = 0; t < ws.obs.size(); ++t) {
      std::size_t u, i, j;
      sampler.sample(rng, &u, &i, &j);
      auto uu = ws.urow(u);
      auto vi = ws.vrow(i);
      auto vj = ws.vrow(j);
      double x = dot(uu, vi) - dot(uu, vj);
      double s = 1.0 / (1.0 + std::exp(x));  // sigma(-x)
      loss += softplus(-x);
      std::copy(uu.begin(), uu.end(), ubuf.begin());
      if (opt.upd_users) {
        for (int k = 0; k < ws.K; ++k) {
          uu[k] += lr * (s * (vi[k] - vj[k]) - 2.0 * lam * uu[k]);
        }
      }
      if (opt.upd_items) {
        for (int k = 0; k < ws.K; ++k) {
          vi[k] += lr * (s * ubuf[k] - 2.0 * lam * vi[k]);
          vj[k] += lr * (-s * ubuf[k] - 2.0 * lam * vj[k]);
        }
      }
    }
    check_finite(loss);
  }
}

void run_bpr_full(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  bool any = false;
  for_each_rankable_pair(ws, [&](std::size_t, std::size_t, std::size_t) {
    any = true;
  });
  if (!any) throw std::runtime_error("BPR: no rankable pairs");
  double lr = cfg.learning_rate, lam = cfg.regularization;
  std::vector<double> gU(ws.U.size()), gV(ws.V.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t j = 0; j < ws.U.size(); ++j) gU[j] = 2.0 * lam * ws.U[j];
    for (std::size_t j = 0; j < ws.V.size(); ++j) gV[j] = 2.0 * lam * ws.V[j];
    double loss = 0.0;
    for_each_rankable_pair(ws, [&](std::size_t u, std::size_t i,
                                   std::size_t j) {
      auto uu = ws.urow(u);
      auto vi = ws.vrow(i);
      auto vj = ws.vrow(j);
      double x = dot(uu, vi) - dot(uu, vj);
      double s = 1.0 / (1.0 + std::exp(x));
      loss += softplus(-x);
      for (int k = 0; k < ws.K; ++k) {
        gU[u * ws.K + k] += -s * (vi[k] - vj[k]);
        gV[i * ws.K + k] += -s * uu[k];
        gV[j * ws.K + k] += s * uu[k];
      }
    });
    check_finite(loss);
    if (opt.upd_users) {
      for (std::size_t j = 0; j < ws.U.size(); ++j) ws.U[j] -= lr * gU[j];
    }
    if (opt.upd_items) {
      for (std::size_t j = 0; j < ws.V.size(); ++j) ws.V[j] -= lr * gV[j];
    }
  }
}

void run_training(Workspace& ws, const MfConfig& cfg, const TrainOpts& opt) {
  switch (cfg.model) {
    case MfModelKind::PMF:
      cfg.batch == BatchMode::Stochastic ? run_pmf_sgd(ws, cfg, opt)
                                         : run_pmf_full(ws, cfg, opt);
      break;
    case MfModelKind::MMMF:
      cfg.batch == BatchMode::Stochastic ? run_mmmf_sgd(ws, cfg, opt)
                                         : run_mmmf_full(ws, cfg, opt);
      break;
    case MfModelKind::BPR:
      cfg.batch == BatchMode::Stochastic ? run_bpr_sgd(ws, cfg, opt)
                                         : run_bpr_full(ws, cfg, opt);
      break;
  }
}

// Least-squares affine fit from raw scores to training ratings.
void fit_calibration(Workspace& ws, MfModel& m) {
  double sx = 0.0, sr = 0.0;
  for (const Obs& o : ws.obs) {
    sx += dot(ws.urow(o.u), ws.vrow(o.i));
    sr += o.r;
  }
  double n = static_cast<double>(ws.obs.size());
  double mx = sx / n, mr = sr / n;
  double sxx = 0.0, sxr = 0.0;
  for (const Obs& o : ws.obs) {
    double x = dot(ws.urow(o.u), ws.vrow(o.i));
    sxx += (x - mx) * (x - mx);
    sxr += (x - mx) * (o.r - mr);
  }
  if (sxx < 1e-12) {
    m.calib_a = 0.0;
    m.calib_b = mr;
  } else {
    m.calib_a = sxr / sxx;
    m.calib_b = mr - m.calib_a * mx;
  }
}

FactorMatrix export_matrix(const std::vector<std::string>& ids,
                           const std::vector<double>& data, int K) {
  FactorMatrix out(K);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out.insert(ids[r], {data.data() + r * static_cast<std::size_t>(K),
                        static_cast<std::size_t>(K)});
  }
  return out;
}

}  // namespace

MfModel train(const RatingDataset& d, const MfConfig& cfg) {
  if (d.size() == 0) throw std::runtime_error("cannot train on empty dataset");
  if (cfg.dim < 1) throw std::runtime_error("dim must be >= 1");
  if (cfg.epochs < 1) throw std::runtime_error("epochs must be >= 1");

  Workspace ws = build_workspace(d, cfg.dim);
  init_factors(ws, cfg);
  if (cfg.model == MfModelKind::MMMF) {
    ws.levels = derive_levels(d);
    init_thresholds(ws);
  }

  TrainOpts opt;
  opt.epochs = cfg.epochs;
  opt.seed = cfg.seed;
  run_training(ws, cfg, opt);

  MfModel m;
  m.config = cfg;
  m.scale = d.scale();
  m.global_mean = d.mean_rating();
  m.users = export_matrix(ws.user_ids, ws.U, ws.K);
  m.items = export_matrix(ws.item_ids, ws.V, ws.K);
  if (cfg.model == MfModelKind::MMMF) {
    m.levels = ws.levels;
    for (std::size_t u = 0; u < ws.n_users(); ++u) {
      auto row = ws.trow(u);
      m.thresholds[ws.user_ids[u]] = {row.begin(), row.end()};
    }
  }
  if (cfg.model == MfModelKind::BPR) fit_calibration(ws, m);
  return m;
}

double predict(const MfModel& m, const std::string& user,
               const std::string& item) {
  if (!m.users.contains(user) || !m.items.contains(item)) {
    return m.global_mean;
  }
  double x = dot(m.users.row(user), m.items.row(item));
  if (m.config.model == MfModelKind::BPR) x = m.calib_a * x + m.calib_b;
  return std::clamp(x, m.scale.min, m.scale.max);
}

MfModel retrain_one_side(const MfModel& m, const RatingDataset& d,
                         FixedSide fixed, std::optional<int> epochs) {
  int ep = epochs.value_or(m.config.epochs);
  if (ep < 0) throw std::runtime_error("epochs must be >= 0");
  if (ep == 0) return m;

  Workspace ws = build_workspace(d, m.config.dim);
  ws.U.resize(ws.n_users() * static_cast<std::size_t>(ws.K));
  ws.V.resize(ws.n_items() * static_cast<std::size_t>(ws.K));
  for (std::size_t u = 0; u < ws.n_users(); ++u) {
    auto src = m.users.row(ws.user_ids[u]);
    std::copy(src.begin(), src.end(), ws.urow(u).begin());
  }
  for (std::size_t i = 0; i < ws.n_items(); ++i) {
    auto src = m.items.row(ws.item_ids[i]);
    std::copy(src.begin(), src.end(), ws.vrow(i).begin());
  }
  if (m.config.model == MfModelKind::MMMF) {
    ws.levels = m.levels;
    std::size_t t = ws.thresholds_per_user();
    ws.theta.resize(ws.n_users() * t);
    for (std::size_t u = 0; u < ws.n_users(); ++u) {
      const auto& th = m.thresholds.at(ws.user_ids[u]);
      std::copy(th.begin(), th.end(), ws.trow(u).begin());
    }
  }

  TrainOpts opt;
  opt.upd_users = fixed == FixedSide::Items;
  opt.upd_items = fixed == FixedSide::Users;
  opt.epochs = ep;
  opt.seed = derive_seed(m.config.seed, "retrain");
  run_training(ws, m.config, opt);

  MfModel out = m;
  out.global_mean = d.mean_rating();
  if (fixed == FixedSide::Users) {
    for (std::size_t i = 0; i < ws.n_items(); ++i) {
      auto dst = out.items.row_mut(ws.item_ids[i]);
      auto src = ws.vrow(i);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  } else {
    for (std::size_t u = 0; u < ws.n_users(); ++u) {
      auto dst = out.users.row_mut(ws.user_ids[u]);
      auto src = ws.urow(u);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    if (m.config.model == MfModelKind::MMMF) {
      for (std::size_t u = 0; u < ws.n_users(); ++u) {
        auto row = ws.trow(u);
        out.thresholds[ws.user_ids[u]] = {row.begin(), row.end()};
      }
    }
  }
  if (m.config.model == MfModelKind::BPR) {
    // scores moved, refit the affine calibration
    fit_calibration(ws, out);
  }
  return out;
}

double objective(const MfModel& m, const RatingDataset& d) {
  double lam = m.config.regularization;
  double reg = 0.0;
  for (const auto& id : m.users.ids()) reg += squared_norm(m.users.row(id));
  for (const auto& id : m.items.ids()) reg += squared_norm(m.items.row(id));
  reg *= lam;

  double data_loss = 0.0;
  switch (m.config.model) {
    case MfModelKind::PMF: {
      for (const auto& t : d.triples()) {
        double e = t.rating - dot(m.users.row(t.user), m.items.row(t.item));
        data_loss += e * e;
      }
      break;
    }
    case MfModelKind::MMMF: {
      for (const auto& t : d.triples()) {
        double x = dot(m.users.row(t.user), m.items.row(t.item));
        const auto& th = m.thresholds.at(t.user);
        std::size_t level = level_of(m.levels, t.rating);
        for (std::size_t k = 0; k < th.size(); ++k) {
          double T = k >= level ? 1.0 : -1.0;
          data_loss += hinge(T * (th[k] - x));
        }
      }
      break;
    }
    case MfModelKind::BPR: {
      Workspace ws = build_workspace(d, m.config.dim);
      for_each_rankable_pair(
          ws, [&](std::size_t u, std::size_t i, std::size_t j) {
            double x = dot(m.users.row(ws.user_ids[u]),
                           m.items.row(ws.item_ids[i])) -
                       dot(m.users.row(ws.user_ids[u]),
                           m.items.row(ws.item_ids[j]));
            data_loss += softplus(-x);
          });
      break;
    }
  }
  return data_loss + reg;
}

double pair_accuracy(const MfModel& m, const RatingDataset& d) {
  Workspace ws = build_workspace(d, m.config.dim);
  std::size_t total = 0, correct = 0;
  for_each_rankable_pair(ws, [&](std::size_t u, std::size_t i, std::size_t j) {
    ++total;
    double si = dot(m.users.row(ws.user_ids[u]), m.items.row(ws.item_ids[i]));
    double sj = dot(m.users.row(ws.user_ids[u]), m.items.row(ws.item_ids[j]));
    if (si > sj) ++correct;
  });
  if (total == 0) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace dcdcsr
