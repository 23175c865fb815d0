#pragma once

#include <string>

#include "dcdcsr/core.hpp"
#include "dcdcsr/dnnmap.hpp"
#include "dcdcsr/mf.hpp"

namespace dcdcsr {

/// Shortest round-trip-exact decimal form of a double.
std::string fmt_double(double x);

struct FactorFileMeta {
  std::string model = "none";
  std::uint64_t seed = 0;
};

/// Tab-separated factor file: a small header (model, dim, count, seed)
/// followed by one "id\tv1\t...\tvK" record per entity.
void save_factors(const FactorMatrix& m, const std::string& path,
                  const FactorFileMeta& meta);
FactorMatrix load_factors(const std::string& path,
                          FactorFileMeta* meta = nullptr);

/// Network checkpoint: header (dim, depth, widths, seed) then one line of
/// weights and one of biases per layer.
void save_network(const MappingNetwork& net, const std::string& path);
MappingNetwork load_network(const std::string& path);

/// Model metadata JSON (kind, dim, seed, scale, global mean, calibration)
/// paired with the two factor files to rebuild a predictor.
void save_model_meta(const MfModel& m, const std::string& path);
MfModel load_model(const std::string& users_path, const std::string& items_path,
                   const std::string& meta_path);

/// Writes ratings in the input format: user,item,rating,timestamp.
void save_ratings(const RatingDataset& d, const std::string& path,
                  char delimiter = ',');

/// FNV-1a 64-bit digest of the file's bytes, as hex.
std::string file_hash(const std::string& path);

}  // namespace dcdcsr
