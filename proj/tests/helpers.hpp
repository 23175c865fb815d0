#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dcdcsr/core.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TmpDir {
 public:
  TmpDir() {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("dcdcsr_test_" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;

  std::filesystem::path path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string write_file(const TmpDir& dir, const std::string& name,
                              const std::string& content) {
  std::string p = dir.file(name);
  std::ofstream out(p);
  out << content;
  return p;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Row {
  std::string user;
  std::string item;
  double rating;
  std::int64_t ts;
};

inline dcdcsr::RatingDataset make_dataset(const std::vector<Row>& rows,
                                          dcdcsr::RatingScale scale = {1, 5}) {
  std::vector<dcdcsr::RatingTriple> triples;
  for (const auto& r : rows) {
    triples.push_back({r.user, r.item, r.rating, r.ts});
  }
  return dcdcsr::RatingDataset::from_triples(std::move(triples), scale);
}

}  // namespace testutil
