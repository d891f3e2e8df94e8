#include "pear/datagen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pear/rng.hpp"

namespace pear {

namespace {
constexpr std::uint64_t kTagB = 1;
constexpr std::uint64_t kTagX = 2;
constexpr std::uint64_t kTagEps = 3;
constexpr const char* kFileTag = "pear-dataset v1";
}  // namespace

double cost_mapping(double bx, int p, int deg) {
  return std::pow(3.5, -static_cast<double>(deg)) *
             std::pow(bx / std::sqrt(static_cast<double>(p)) + 3.0, deg) +
         1.0;
}

Dataset generate(const GenConfig& cfg) {
  if (cfg.p <= 0 || cfg.d <= 0 || cfg.deg < 1) {
    throw std::invalid_argument("generate: p, d and deg must be positive");
  }
  if (cfg.noise_half_width < 0.0 || cfg.noise_half_width >= 1.0) {
    throw std::invalid_argument("generate: noise half-width must lie in [0, 1)");
  }

  Dataset ds;
  ds.config = cfg;
  const int count = cfg.total();

  auto rng_b = substream(cfg.seed, kTagB);
  std::bernoulli_distribution coin(cfg.bernoulli);
  ds.B.resize(cfg.d, cfg.p);
  for (int i = 0; i < cfg.d; ++i)
    for (int j = 0; j < cfg.p; ++j) ds.B(i, j) = coin(rng_b) ? 1.0 : 0.0;

  auto rng_x = substream(cfg.seed, kTagX);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.X.resize(count, cfg.p);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < cfg.p; ++j) ds.X(i, j) = gauss(rng_x);

  auto rng_e = substream(cfg.seed, kTagEps);
  std::uniform_real_distribution<double> eps(1.0 - cfg.noise_half_width,
                                             1.0 + cfg.noise_half_width);
  ds.C.resize(count, cfg.d);
  for (int i = 0; i < count; ++i) {
    const Vector bx = ds.B * ds.X.row(i).transpose();
    for (int j = 0; j < cfg.d; ++j) {
      const double base = cost_mapping(bx(j), cfg.p, cfg.deg);
      const double mult = cfg.noise_half_width > 0.0 ? eps(rng_e) : 1.0;
      ds.C(i, j) = base * mult;
    }
  }
  return ds;
}

Splits split(const Dataset& ds, int train, int val, int test) {
  if (train < 0 || val < 0 || test < 0 || train + val + test > ds.count()) {
    throw SizesExceedData("split: requested sizes exceed sample count");
  }
  Splits s;
  s.train = {0, train};
  s.val = {train, val};
  s.test = {train + val, test};
  return s;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out.precision(17);
  const auto& cfg = ds.config;
  out << "# " << kFileTag << " seed=" << cfg.seed << " p=" << cfg.p << " d=" << cfg.d
      << " deg=" << cfg.deg << " noise=" << cfg.noise_half_width
      << " bernoulli=" << cfg.bernoulli << " train=" << cfg.train << " val=" << cfg.val
      << " test=" << cfg.test << "\n";
  for (int j = 0; j < cfg.p; ++j) out << "x" << j << ",";
  for (int j = 0; j < cfg.d; ++j) out << "c" << j << (j + 1 < cfg.d ? "," : "\n");
  for (int i = 0; i < ds.count(); ++i) {
    for (int j = 0; j < cfg.p; ++j) out << ds.X(i, j) << ",";
    for (int j = 0; j < cfg.d; ++j) out << ds.C(i, j) << (j + 1 < cfg.d ? "," : "\n");
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string meta;
  std::getline(in, meta);
  if (meta.rfind(std::string("# ") + kFileTag, 0) != 0) {
    throw std::runtime_error("load_dataset: unrecognized file tag in " + path);
  }

  Dataset ds;
  auto read_field = [&meta](const std::string& key) {
    const auto pos = meta.find(" " + key + "=");
    if (pos == std::string::npos)
      throw std::runtime_error("load_dataset: missing field " + key);
    return std::stod(meta.substr(pos + key.size() + 2));
  };
  ds.config.seed = static_cast<std::uint64_t>(read_field("seed"));
  ds.config.p = static_cast<int>(read_field("p"));
  ds.config.d = static_cast<int>(read_field("d"));
  ds.config.deg = static_cast<int>(read_field("deg"));
  ds.config.noise_half_width = read_field("noise");
  ds.config.bernoulli = read_field("bernoulli");
  ds.config.train = static_cast<int>(read_field("train"));
  ds.config.val = static_cast<int>(read_field("val"));
  ds.config.test = static_cast<int>(read_field("test"));

  std::string header;
  std::getline(in, header);  // column names
  const int count = ds.config.total();
  ds.X.resize(count, ds.config.p);
  ds.C.resize(count, ds.config.d);
  std::string line;
  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("load_dataset: truncated file " + path);
    }
    std::stringstream ss(line);
    std::string cell;
    for (int j = 0; j < ds.config.p; ++j) {
      std::getline(ss, cell, ',');
      ds.X(i, j) = std::stod(cell);
    }
    for (int j = 0; j < ds.config.d; ++j) {
      std::getline(ss, cell, ',');
      ds.C(i, j) = std::stod(cell);
    }
  }
  // The mixing matrix is generation metadata; files carry features and costs only.
  ds.B.resize(0, 0);
  return ds;
}

}  // namespace pear
