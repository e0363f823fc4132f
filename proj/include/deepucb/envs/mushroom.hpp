#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deepucb/envs/environment.hpp"

namespace deepucb {

struct MushroomAttribute {
  std::string_view name;
  std::string_view symbols;  // one-hot column order
};

/// The 22 attributes of the UCI agaricus-lepiota table, in file order.
inline constexpr std::array<MushroomAttribute, 22> kMushroomAttributes = {{
    {"cap-shape", "bcxfks"},
    {"cap-surface", "fgys"},
    {"cap-color", "nbcgrpuewy"},
    {"bruises", "tf"},
    {"odor", "alcyfmnps"},
    {"gill-attachment", "adfn"},
    {"gill-spacing", "cwd"},
    {"gill-size", "bn"},
    {"gill-color", "knbhgropuewy"},
    {"stalk-shape", "et"},
    {"stalk-root", "bcuezr"},
    {"stalk-surface-above-ring", "fyks"},
    {"stalk-surface-below-ring", "fyks"},
    {"stalk-color-above-ring", "nbcgopewy"},
    {"stalk-color-below-ring", "nbcgopewy"},
    {"veil-type", "pu"},
    {"veil-color", "nowy"},
    {"ring-number", "not"},
    {"ring-type", "ceflnpsz"},
    {"spore-print-color", "knbhrouwy"},
    {"population", "acnsvy"},
    {"habitat", "glmpuwd"},
}};

/// stalk-root has missing values ('?') and is left out of the encoding.
inline constexpr std::string_view kMushroomDroppedAttribute = "stalk-root";

/// Column names of the one-hot encoding, "attribute=symbol".
inline std::vector<std::string> mushroom_columns() {
  std::vector<std::string> cols;
  for (const auto& a : kMushroomAttributes) {
    if (a.name == kMushroomDroppedAttribute) continue;
    for (char s : a.symbols) cols.push_back(std::string(a.name) + "=" + s);
  }
  return cols;
}

struct MushroomTable {
  Eigen::MatrixXd features;  // n_columns x n_rows, one-hot
  std::vector<bool> edible;
};

/// Parses the comma-separated table (class label first). Unknown symbols
/// raise a DatasetError naming the 1-based row and the attribute.
inline MushroomTable parse_mushroom(std::istream& in, const std::string& source = "mushroom") {
  const auto columns = mushroom_columns();
  std::vector<std::vector<std::size_t>> hot_rows;
  MushroomTable table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != kMushroomAttributes.size() + 1)
      throw DatasetError(DatasetError::Kind::BadValue, source + ": row " + std::to_string(row) + " has " +
                                                           std::to_string(fields.size()) + " fields, expected 23");
    if (fields[0] != "e" && fields[0] != "p")
      throw DatasetError(DatasetError::Kind::BadValue,
                         source + ": row " + std::to_string(row) + " column class: unknown label '" + fields[0] + "'");
    table.edible.push_back(fields[0] == "e");
    std::vector<std::size_t> hot;
    std::size_t offset = 0;
    for (std::size_t a = 0; a < kMushroomAttributes.size(); ++a) {
      const auto& attr = kMushroomAttributes[a];
      const auto& value = fields[a + 1];
      if (attr.name == kMushroomDroppedAttribute) continue;
      const auto pos = value.size() == 1 ? attr.symbols.find(value[0]) : std::string_view::npos;
      if (pos == std::string_view::npos)
        throw DatasetError(DatasetError::Kind::BadValue, source + ": row " + std::to_string(row) + " column " +
                                                             std::string(attr.name) + ": unknown symbol '" + value +
                                                             "'");
      hot.push_back(offset + pos);
      offset += attr.symbols.size();
    }
    hot_rows.push_back(std::move(hot));
  }
  if (hot_rows.empty()) throw DatasetError(DatasetError::Kind::CountMismatch, source + ": no rows");
  table.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(columns.size()),
                                         static_cast<Eigen::Index>(hot_rows.size()));
  for (std::size_t r = 0; r < hot_rows.size(); ++r)
    for (auto c : hot_rows[r]) table.features(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = 1.0;
  return table;
}

inline MushroomTable load_mushroom(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::NotFound, "cannot open dataset file " + path.string());
  return parse_mushroom(in, path.string());
}

struct MushroomEnvConfig {
  std::filesystem::path data;
  std::size_t n_arms = 5;
  double noise_sigma = 2.0;
  double edible_probability = 0.5;

  bool operator==(const MushroomEnvConfig&) const = default;
};

/// Each arm shows one mushroom per round: edible (reward 1) with probability
/// `edible_probability`, otherwise poisonous (reward 0).
class MushroomEnv : public Environment {
 public:
  explicit MushroomEnv(const MushroomEnvConfig& cfg) : MushroomEnv(cfg, load_mushroom(cfg.data)) {}

  MushroomEnv(const MushroomEnvConfig& cfg, MushroomTable table) : cfg_(cfg), table_(std::move(table)) {
    if (cfg.n_arms < 1) throw std::invalid_argument("mushroom: n_arms must be >= 1");
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("mushroom: noise_sigma must be >= 0");
    if (!(cfg.edible_probability >= 0.0 && cfg.edible_probability <= 1.0))
      throw std::invalid_argument("mushroom: edible_probability must be in [0, 1]");
    for (std::size_t i = 0; i < table_.edible.size(); ++i) (table_.edible[i] ? edible_ : poisonous_).push_back(i);
    if (edible_.empty() || poisonous_.empty())
      throw DatasetError(DatasetError::Kind::BadValue, "mushroom: table needs both edible and poisonous rows");
  }

  std::string id() const override { return "mushroom"; }
  std::size_t n_arms() const override { return cfg_.n_arms; }
  std::size_t context_dim() const override { return static_cast<std::size_t>(table_.features.rows()); }
  double noise_sigma() const override { return cfg_.noise_sigma; }
  const MushroomTable& table() const { return table_; }

  Round draw_round(Rng& rng) const override {
    Round r{Eigen::MatrixXd(table_.features.rows(), static_cast<Eigen::Index>(cfg_.n_arms)),
            Eigen::VectorXd(static_cast<Eigen::Index>(cfg_.n_arms))};
    for (std::size_t a = 0; a < cfg_.n_arms; ++a) {
      const bool edible = uniform01(rng) < cfg_.edible_probability;
      const auto& pool = edible ? edible_ : poisonous_;
      r.contexts.col(static_cast<Eigen::Index>(a)) =
          table_.features.col(static_cast<Eigen::Index>(pool[uniform_index(rng, pool.size())]));
      r.expected(static_cast<Eigen::Index>(a)) = edible ? 1.0 : 0.0;
    }
    return r;
  }

 private:
  MushroomEnvConfig cfg_;
  MushroomTable table_;
  std::vector<std::size_t> edible_;
  std::vector<std::size_t> poisonous_;
};

}  // namespace deepucb
