#include "dcdcsr/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcdcsr {

std::size_t EntityIndex::add(const std::string& id) {
  auto it = map_.find(id);
  if (it != map_.end()) return it->second;
  std::size_t idx = ids_.size();
  map_.emplace(id, idx);
  ids_.push_back(id);
  return idx;
}

std::size_t EntityIndex::get(const std::string& id) const {
  auto it = map_.find(id);
  return it == map_.end() ? npos : it->second;
}

namespace {

// Duplicate (user, item) pairs keep the latest timestamp; on equal
// timestamps the later occurrence wins.
std::vector<RatingTriple> dedup_latest(std::vector<RatingTriple> triples) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<RatingTriple> out;
  out.reserve(triples.size());
  for (auto& t : triples) {
    std::string key = t.user + '\x1f' + t.item;
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), out.size());
      out.push_back(std::move(t));
    } else if (t.timestamp >= out[it->second].timestamp) {
      out[it->second] = std::move(t);
    }
  }
  return out;
}

}  // namespace

RatingDataset RatingDataset::from_triples(std::vector<RatingTriple> triples,
                                          RatingScale scale) {
  RatingDataset d;
  d.scale_ = scale;
  auto users = std::make_shared<EntityIndex>();
  auto items = std::make_shared<EntityIndex>();
  for (const auto& t : triples) {
    if (t.rating < scale.min || t.rating > scale.max ||
        !std::isfinite(t.rating)) {
      throw std::runtime_error("rating out of scale: " + t.user + "," +
                               t.item + " rating " + std::to_string(t.rating));
    }
    users->add(t.user);
    items->add(t.item);
  }
  d.triples_ = dedup_latest(std::move(triples));
  d.user_index_ = std::move(users);
  d.item_index_ = std::move(items);
  d.rebuild_counts();
  return d;
}

void RatingDataset::rebuild_counts() {
  user_counts_.clear();
  item_counts_.clear();
  for (const auto& t : triples_) {
    ++user_counts_[t.user];
    ++item_counts_[t.item];
  }
}

std::size_t RatingDataset::rating_count(const std::string& id,
                                        EntityKind kind) const {
  const auto& counts = kind == EntityKind::User ? user_counts_ : item_counts_;
  auto it = counts.find(id);
  return it == counts.end() ? 0 : it->second;
}

double RatingDataset::mean_rating() const {
  if (triples_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : triples_) sum += t.rating;
  return sum / static_cast<double>(triples_.size());
}

std::size_t rating_count(const RatingDataset& d, const std::string& id,
                         EntityKind kind) {
  return d.rating_count(id, kind);
}

RatingDataset load_ratings(const std::string& path, RatingScale scale,
                           char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings file: " + path);

  std::vector<RatingTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, delimiter)) cols.push_back(col);
    if (cols.size() < 3 || cols.size() > 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected user,item,rating[,timestamp]");
    }

    RatingTriple t;
    t.user = cols[0];
    t.item = cols[1];
    try {
      std::size_t pos = 0;
      t.rating = std::stod(cols[2], &pos);
      if (pos != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad rating '" + cols[2] + "'");
    }
    if (cols.size() == 4) {
      try {
        std::size_t pos = 0;
        t.timestamp = std::stoll(cols[3], &pos);
        if (pos != cols[3].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": bad timestamp '" + cols[3] + "'");
      }
    } else {
      t.timestamp = static_cast<std::int64_t>(line_no);
    }
    if (t.rating < scale.min || t.rating > scale.max ||
        !std::isfinite(t.rating)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": rating out of scale [" +
                               std::to_string(scale.min) + "," +
                               std::to_string(scale.max) + "]");
    }
    triples.push_back(std::move(t));
  }
  if (triples.empty()) throw std::runtime_error("empty ratings file: " + path);
  return RatingDataset::from_triples(std::move(triples), scale);
}

std::pair<RatingDataset, RatingDataset> chronological_split(
    const RatingDataset& d, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::runtime_error("train_fraction must be in (0, 1)");
  }
  if (d.size() < 2) {
    throw std::runtime_error("cannot split a dataset with fewer than 2 ratings");
  }

  std::vector<RatingTriple> sorted = d.triples_;
  std::sort(sorted.begin(), sorted.end(),
            [](const RatingTriple& a, const RatingTriple& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.user != b.user) return a.user < b.user;
              return a.item < b.item;
            });

  auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(sorted.size())));

  RatingDataset train, test;
  train.scale_ = test.scale_ = d.scale_;
  train.user_index_ = test.user_index_ = d.user_index_;
  train.item_index_ = test.item_index_ = d.item_index_;
  train.triples_.assign(sorted.begin(), sorted.begin() + n_train);
  test.triples_.assign(sorted.begin() + n_train, sorted.end());
  train.rebuild_counts();
  test.rebuild_counts();
  return {std::move(train), std::move(test)};
}

void FactorMatrix::insert(const std::string& id, std::span<const double> v) {
  if (static_cast<int>(v.size()) != dim_) {
    throw std::runtime_error("factor vector for '" + id + "' has length " +
                             std::to_string(v.size()) + ", expected " +
                             std::to_string(dim_));
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error("non-finite factor component for '" + id + "'");
    }
  }
  if (index_.count(id)) {
    throw std::runtime_error("duplicate factor entity '" + id + "'");
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  data_.insert(data_.end(), v.begin(), v.end());
}

std::span<const double> FactorMatrix::row(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::runtime_error("unknown factor entity '" + id + "'");
  }
  return row_at(it->second);
}

std::span<double> FactorMatrix::row_mut(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw std::runtime_error("unknown factor entity '" + id + "'");
  }
  return {data_.data() + it->second * static_cast<std::size_t>(dim_),
          static_cast<std::size_t>(dim_)};
}

}  // namespace dcdcsr
