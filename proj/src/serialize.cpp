#include "dcdcsr/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dcdcsr {

using nlohmann::json;

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::string expect_line(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": truncated file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// "key value" header line; throws when the key differs.
std::string header_value(std::ifstream& in, const std::string& path,
                         const std::string& key) {
  std::string line = expect_line(in, path);
  if (line.rfind(key + " ", 0) != 0) {
    throw std::runtime_error(path + ": expected header '" + key + "'");
  }
  return line.substr(key.size() + 1);
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": bad number '" + s + "'");
  }
}

}  // namespace

void save_factors(const FactorMatrix& m, const std::string& path,
                  const FactorFileMeta& meta) {
  auto out = open_out(path);
  out << "#factors v1\n";
  out << "model " << meta.model << '\n';
  out << "dim " << m.dim() << '\n';
  out << "count " << m.size() << '\n';
  out << "seed " << meta.seed << '\n';
  for (const auto& id : m.ids()) {
    out << id;
    for (double v : m.row(id)) out << '\t' << fmt_double(v);
    out << '\n';
  }
}

FactorMatrix load_factors(const std::string& path, FactorFileMeta* meta) {
  auto in = open_in(path);
  if (expect_line(in, path) != "#factors v1") {
    throw std::runtime_error(path + ": not a factor file");
  }
  std::string model = header_value(in, path, "model");
  int dim = static_cast<int>(parse_double(header_value(in, path, "dim"), path));
  std::size_t count = static_cast<std::size_t>(
      parse_double(header_value(in, path, "count"), path));
  std::uint64_t seed = std::stoull(header_value(in, path, "seed"));
  if (meta) {
    meta->model = model;
    meta->seed = seed;
  }

  FactorMatrix m(dim);
  std::vector<double> buf(dim);
  for (std::size_t r = 0; r < count; ++r) {
    std::string line = expect_line(in, path);
    std::stringstream ss(line);
    std::string id, col;
    if (!std::getline(ss, id, '\t')) {
      throw std::runtime_error(path + ": bad record");
    }
    for (int c = 0; c < dim; ++c) {
      if (!std::getline(ss, col, '\t')) {
        throw std::runtime_error(path + ": record for '" + id +
                                 "' has too few values");
      }
      buf[c] = parse_double(col, path);
    }
    m.insert(id, buf);
  }
  return m;
}

void save_network(const MappingNetwork& net, const std::string& path) {
  auto out = open_out(path);
  out << "#network v1\n";
  out << "dim " << net.dim << '\n';
  out << "depth " << net.depth << '\n';
  out << "widths";
  for (int w : net.widths) out << ' ' << w;
  out << '\n';
  out << "seed " << net.seed << '\n';
  for (int j = 0; j < net.depth; ++j) {
    out << "W" << j;
    for (double w : net.weights[j]) out << ' ' << fmt_double(w);
    out << '\n';
    out << "b" << j;
    for (double b : net.biases[j]) out << ' ' << fmt_double(b);
    out << '\n';
  }
}

MappingNetwork load_network(const std::string& path) {
  auto in = open_in(path);
  if (expect_line(in, path) != "#network v1") {
    throw std::runtime_error(path + ": not a network checkpoint");
  }
  MappingNetwork net;
  net.dim = static_cast<int>(parse_double(header_value(in, path, "dim"), path));
  net.depth =
      static_cast<int>(parse_double(header_value(in, path, "depth"), path));
  {
    std::stringstream ss(header_value(in, path, "widths"));
    int w;
    while (ss >> w) net.widths.push_back(w);
    if (static_cast<int>(net.widths.size()) != net.depth + 1) {
      throw std::runtime_error(path + ": widths/depth mismatch");
    }
  }
  net.seed = std::stoull(header_value(in, path, "seed"));
  net.weights.resize(net.depth);
  net.biases.resize(net.depth);
  for (int j = 0; j < net.depth; ++j) {
    std::size_t rows = net.widths[j + 1], cols = net.widths[j];
    {
      std::stringstream ss(
          header_value(in, path, "W" + std::to_string(j)));
      std::string tok;
      while (ss >> tok) net.weights[j].push_back(parse_double(tok, path));
      if (net.weights[j].size() != rows * cols) {
        throw std::runtime_error(path + ": layer " + std::to_string(j) +
                                 " weight count mismatch");
      }
    }
    {
      std::stringstream ss(
          header_value(in, path, "b" + std::to_string(j)));
      std::string tok;
      while (ss >> tok) net.biases[j].push_back(parse_double(tok, path));
      if (net.biases[j].size() != rows) {
        throw std::runtime_error(path + ": layer " + std::to_string(j) +
                                 " bias count mismatch");
      }
    }
  }
  return net;
}

void save_model_meta(const MfModel& m, const std::string& path) {
  json j;
  j["format"] = "mf-model/v1";
  j["model"] = to_string(m.config.model);
  j["dim"] = m.config.dim;
  j["seed"] = m.config.seed;
  j["global_mean"] = m.global_mean;
  j["r_min"] = m.scale.min;
  j["r_max"] = m.scale.max;
  j["calib_a"] = m.calib_a;
  j["calib_b"] = m.calib_b;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

MfModel load_model(const std::string& users_path, const std::string& items_path,
                   const std::string& meta_path) {
  auto in = open_in(meta_path);
  json j = json::parse(in);
  if (j.value("format", "") != "mf-model/v1") {
    throw std::runtime_error(meta_path + ": not a model meta file");
  }
  MfModel m;
  m.config.model = mf_kind_from_string(j.at("model").get<std::string>());
  m.config.dim = j.at("dim").get<int>();
  m.config.seed = j.at("seed").get<std::uint64_t>();
  m.global_mean = j.at("global_mean").get<double>();
  m.scale.min = j.at("r_min").get<double>();
  m.scale.max = j.at("r_max").get<double>();
  m.calib_a = j.at("calib_a").get<double>();
  m.calib_b = j.at("calib_b").get<double>();
  m.users = load_factors(users_path);
  m.items = load_factors(items_path);
  if (m.users.dim() != m.config.dim || m.items.dim() != m.config.dim) {
    throw std::runtime_error(meta_path + ": factor files disagree with dim");
  }
  return m;
}

void save_ratings(const RatingDataset& d, const std::string& path,
                  char delimiter) {
  auto out = open_out(path);
  for (const auto& t : d.triples()) {
    out << t.user << delimiter << t.item << delimiter << fmt_double(t.rating)
        << delimiter << t.timestamp << '\n';
  }
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

}  // namespace dcdcsr
