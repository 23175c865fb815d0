#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dcdcsr {

enum class EntityKind { User, Item };

struct RatingTriple {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;
};

/// Bijection external id <-> dense index in first-appearance order.
class EntityIndex {
 public:
  std::size_t add(const std::string& id);
  /// Dense index of id, or npos when unknown.
  std::size_t get(const std::string& id) const;
  const std::string& id_of(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::unordered_map<std::string, std::size_t> map_;
  std::vector<std::string> ids_;
};

/// Immutable set of (user, item, rating, timestamp) triples for one domain
/// or system, with dense entity indices shared by chronological splits.
class RatingDataset {
 public:
  RatingDataset() = default;

  /// Builds a dataset from raw triples: validates ratings against the
  /// scale, assigns dense indices in first-appearance order and resolves
  /// duplicate (user, item) pairs by keeping the latest timestamp.
  static RatingDataset from_triples(std::vector<RatingTriple> triples,
                                    RatingScale scale);

  const std::vector<RatingTriple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  RatingScale scale() const { return scale_; }

  const EntityIndex& users() const { return *user_index_; }
  const EntityIndex& items() const { return *item_index_; }
  std::size_t n_users() const { return user_index_->size(); }
  std::size_t n_items() const { return item_index_->size(); }

  /// Number of triples referencing the entity; 0 for unknown ids.
  std::size_t rating_count(const std::string& id, EntityKind kind) const;

  double mean_rating() const;

  friend std::pair<RatingDataset, RatingDataset> chronological_split(
      const RatingDataset& d, double train_fraction);
  friend RatingDataset load_ratings(const std::string& path, RatingScale scale,
                                    char delimiter);

 private:
  void rebuild_counts();

  std::vector<RatingTriple> triples_;
  std::shared_ptr<const EntityIndex> user_index_;
  std::shared_ptr<const EntityIndex> item_index_;
  RatingScale scale_;
  std::unordered_map<std::string, std::size_t> user_counts_;
  std::unordered_map<std::string, std::size_t> item_counts_;
};

/// Loads line-delimited ratings: user, item, rating and an optional
/// timestamp column (line order stands in for time when absent).
RatingDataset load_ratings(const std::string& path, RatingScale scale,
                           char delimiter = ',');

/// Splits by timestamp, ties broken by (user, item) id order. The first
/// floor(train_fraction * n) triples form the train half; both halves keep
/// the parent's entity indices.
std::pair<RatingDataset, RatingDataset> chronological_split(
    const RatingDataset& d, double train_fraction);

std::size_t rating_count(const RatingDataset& d, const std::string& id,
                         EntityKind kind);

/// K-dimensional latent vectors keyed by external entity id, kept in
/// insertion order. All vectors have length dim and finite components.
class FactorMatrix {
 public:
  FactorMatrix() = default;
  explicit FactorMatrix(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  const std::vector<std::string>& ids() const { return ids_; }

  void insert(const std::string& id, std::span<const double> v);

  std::span<const double> row(const std::string& id) const;
  std::span<double> row_mut(const std::string& id);
  std::span<const double> row_at(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }

  bool operator==(const FactorMatrix& other) const = default;

 private:
  int dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

}  // namespace dcdcsr
