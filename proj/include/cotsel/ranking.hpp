#pragma once

// Rank construction, the weighted joint ranker and every selection strategy.
// Rank 1 is the most difficult / longest record. Ties anywhere are broken
// by ascending record id, so every output is a pure function of its input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cotsel/error.hpp"
#include "cotsel/hash.hpp"
#include "cotsel/random.hpp"
#include "cotsel/trace.hpp"
#include "json.hpp"

namespace cotsel::ranking {

using IdList = std::vector<std::string>;
using RankMap = std::unordered_map<std::string, std::size_t>;
using ScoreMap = std::unordered_map<std::string, double>;

enum class Order { kDescending, kAscending };

namespace detail {

template <class Map>
std::vector<std::pair<std::string, typename Map::mapped_type>> sorted_entries(
    const Map& values, Order order) {
  std::vector<std::pair<std::string, typename Map::mapped_type>> v(values.begin(),
                                                                    values.end());
  std::sort(v.begin(), v.end(), [order](const auto& a, const auto& b) {
    if (a.second != b.second) {
      return order == Order::kDescending ? b.second < a.second : a.second < b.second;
    }
    return a.first < b.first;
  });
  return v;
}

inline std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace detail

// Ids in priority order.
template <class Map>
IdList order_ids(const Map& values, Order order = Order::kDescending) {
  IdList ids;
  ids.reserve(values.size());
  for (auto& e : detail::sorted_entries(values, order)) ids.push_back(std::move(e.first));
  return ids;
}

template <class Map>
RankMap rank_by(const Map& values, Order order = Order::kDescending) {
  if (values.empty()) throw RankingError("cannot rank an empty value set");
  RankMap ranks;
  ranks.reserve(values.size());
  std::size_t r = 0;
  for (auto& id : order_ids(values, order)) ranks.emplace(std::move(id), ++r);
  return ranks;
}

// Ranks exactly the ids in scope; any id without a value is an error.
template <class Map>
RankMap rank_by(const std::vector<std::string>& scope, const Map& values,
                Order order = Order::kDescending) {
  Map subset;
  std::vector<std::string> missing;
  for (const auto& id : scope) {
    auto it = values.find(id);
    if (it == values.end()) {
      missing.push_back(id);
    } else {
      subset.emplace(id, it->second);
    }
  }
  if (!missing.empty()) {
    throw RankingError("no value for ids: " + detail::join_ids(missing));
  }
  return rank_by(subset, order);
}

// w * rank_d + (1 - w) * rank_l; lower is better.
inline ScoreMap joint_rank(const RankMap& rank_d, const RankMap& rank_l, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw RankingError("joint weight must lie in [0, 1]");
  std::vector<std::string> only_d, only_l;
  for (const auto& [id, r] : rank_d) {
    if (!rank_l.count(id)) only_d.push_back(id);
  }
  for (const auto& [id, r] : rank_l) {
    if (!rank_d.count(id)) only_l.push_back(id);
  }
  if (!only_d.empty() || !only_l.empty()) {
    std::sort(only_d.begin(), only_d.end());
    std::sort(only_l.begin(), only_l.end());
    throw RankingError("rank maps differ; only in difficulty: [" +
                       detail::join_ids(only_d) + "], only in length: [" +
                       detail::join_ids(only_l) + "]");
  }
  ScoreMap joint;
  joint.reserve(rank_d.size());
  for (const auto& [id, rd] : rank_d) {
    joint.emplace(id, w * static_cast<double>(rd) +
                          (1.0 - w) * static_cast<double>(rank_l.at(id)));
  }
  return joint;
}

// Top-K by score, output in priority order.
template <class Map>
IdList select_top_k(const Map& scores, std::size_t k, bool lower_is_better) {
  if (k > scores.size()) {
    throw RankingError("K=" + std::to_string(k) + " exceeds pool size " +
                       std::to_string(scores.size()));
  }
  auto ids = order_ids(scores, lower_is_better ? Order::kAscending : Order::kDescending);
  ids.resize(k);
  return ids;
}

enum class LengthBand { kLongest, kMiddle, kShortest };

template <class Map>
IdList select_length_band(const Map& lengths, LengthBand band, std::size_t k) {
  if (k > lengths.size()) {
    throw RankingError("K=" + std::to_string(k) + " exceeds pool size " +
                       std::to_string(lengths.size()));
  }
  switch (band) {
    case LengthBand::kLongest:
      return select_top_k(lengths, k, false);
    case LengthBand::kShortest:
      return select_top_k(lengths, k, true);
    case LengthBand::kMiddle: {
      auto ids = order_ids(lengths, Order::kDescending);
      const std::size_t start = (ids.size() - k) / 2;
      return IdList(ids.begin() + static_cast<std::ptrdiff_t>(start),
                    ids.begin() + static_cast<std::ptrdiff_t>(start + k));
    }
  }
  return {};
}

enum class DifficultyBand { kDifficult, kEasy };

template <class Map>
IdList select_difficulty_band(const Map& scores, DifficultyBand band, std::size_t k) {
  return select_top_k(scores, k, band == DifficultyBand::kEasy);
}

inline IdList select_random(IdList pool_ids, std::size_t k, std::uint64_t seed) {
  if (k > pool_ids.size()) {
    throw RankingError("K=" + std::to_string(k) + " exceeds pool size " +
                       std::to_string(pool_ids.size()));
  }
  std::sort(pool_ids.begin(), pool_ids.end());
  PortableRng rng(seed);
  rng.sample_prefix(pool_ids, k);
  pool_ids.resize(k);
  return pool_ids;
}

inline constexpr std::string_view kUncategorized = "uncategorized";

struct CategorizedId {
  std::string id;
  std::optional<std::string> category;
};

// Round-robin over categories in lexicographic order, each drawing from a
// seeded shuffle of its members; exhausted categories drop out.
inline IdList select_diverse(const std::vector<CategorizedId>& items, std::size_t k,
                             std::uint64_t seed) {
  if (k > items.size()) {
    throw RankingError("K=" + std::to_string(k) + " exceeds pool size " +
                       std::to_string(items.size()));
  }
  std::map<std::string, IdList> groups;
  for (const auto& it : items) {
    const std::string cat = it.category && !it.category->empty()
                                ? *it.category
                                : std::string(kUncategorized);
    groups[cat].push_back(it.id);
  }
  PortableRng rng(seed);
  std::vector<IdList*> queues;
  for (auto& [cat, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    queues.push_back(&ids);
  }
  IdList out;
  out.reserve(k);
  std::vector<std::size_t> cursor(queues.size(), 0);
  while (out.size() < k) {
    for (std::size_t q = 0; q < queues.size() && out.size() < k; ++q) {
      if (cursor[q] < queues[q]->size()) out.push_back((*queues[q])[cursor[q]++]);
    }
  }
  return out;
}

enum class Strategy { kJoint, kLongest, kMiddle, kShortest, kDifficult, kEasy, kRandom, kDiverse };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kJoint: return "joint";
    case Strategy::kLongest: return "longest";
    case Strategy::kMiddle: return "middle";
    case Strategy::kShortest: return "shortest";
    case Strategy::kDifficult: return "difficult";
    case Strategy::kEasy: return "easy";
    case Strategy::kRandom: return "random";
    case Strategy::kDiverse: return "diverse";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::kJoint, Strategy::kLongest, Strategy::kMiddle,
                  Strategy::kShortest, Strategy::kDifficult, Strategy::kEasy,
                  Strategy::kRandom, Strategy::kDiverse}) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

inline bool needs_difficulty(Strategy s) {
  return s == Strategy::kJoint || s == Strategy::kDifficult || s == Strategy::kEasy;
}

// Exactly one of fraction / count.
struct KSpec {
  std::optional<double> fraction;
  std::optional<std::size_t> count;

  static KSpec of_fraction(double f) { return KSpec{f, std::nullopt}; }
  static KSpec of_count(std::size_t n) { return KSpec{std::nullopt, n}; }

  void validate() const {
    if (fraction.has_value() == count.has_value()) {
      throw ConfigError("K must be given as exactly one of a fraction or a count");
    }
    if (fraction && !(*fraction > 0.0 && *fraction <= 1.0)) {
      throw ConfigError("K fraction must lie in (0, 1]");
    }
    if (count && *count == 0) throw ConfigError("K count must be positive");
  }

  // floor(fraction * n), at least 1. The 1e-9 slack absorbs binary
  // representation error, e.g. 0.29 * 100.
  std::size_t resolve(std::size_t n) const {
    validate();
    if (count) {
      if (*count > n) {
        throw RankingError("K=" + std::to_string(*count) + " exceeds pool size " +
                           std::to_string(n));
      }
      return *count;
    }
    const auto k = static_cast<std::size_t>(std::floor(*fraction * static_cast<double>(n) + 1e-9));
    return std::min(n, std::max<std::size_t>(k, 1));
  }
};

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct SelectionSpec {
  Strategy strategy = Strategy::kJoint;
  KSpec k = KSpec::of_fraction(0.10);
  double w = 0.25;
  std::uint64_t seed = 0;
  trace::LengthUnit length_unit = trace::LengthUnit::kTokens;

  void validate() const {
    k.validate();
    if (strategy == Strategy::kJoint && !(w >= 0.0 && w <= 1.0)) {
      throw ConfigError("joint weight w must lie in [0, 1]");
    }
  }

  // Stable text form that feeds the manifest hash. Fields a strategy
  // ignores are omitted so they cannot perturb the hash.
  std::string canonical() const {
    std::string s = "strategy=" + std::string(to_string(strategy));
    s += k.fraction ? ";k_fraction=" + format_real(*k.fraction)
                    : ";k_count=" + std::to_string(*k.count);
    if (strategy == Strategy::kJoint) s += ";w=" + format_real(w);
    if (strategy == Strategy::kRandom || strategy == Strategy::kDiverse) {
      s += ";seed=" + std::to_string(seed);
    }
    s += ";length_unit=" + std::string(trace::to_string(length_unit));
    s += ";tie_break=ascending-id";
    return s;
  }
};

struct PoolEntry {
  std::string id;
  std::size_t length = 0;
  std::optional<double> difficulty;
  std::optional<std::string> category;
};

struct Selection {
  SelectionSpec spec;
  IdList ids;
  std::size_t pool_size = 0;
  std::string pool_digest;
  std::string manifest_hash;
  // Pool ids left out of ranking because they had no difficulty score.
  IdList excluded;
};

inline std::string pool_digest(IdList ids) {
  std::sort(ids.begin(), ids.end());
  ContentHasher h;
  for (const auto& id : ids) h.update(id).update("\n");
  return h.hex128();
}

inline std::string manifest_hash(const SelectionSpec& spec, std::string_view digest,
                                 const IdList& ids) {
  ContentHasher h;
  h.update(spec.canonical()).separator().update(digest).separator();
  for (const auto& id : ids) h.update(id).update("\n");
  return h.hex128();
}

inline Selection make_selection(const SelectionSpec& spec, const IdList& pool_ids,
                                IdList ids, IdList excluded = {}) {
  Selection s;
  s.spec = spec;
  s.pool_size = pool_ids.size();
  s.pool_digest = pool_digest(pool_ids);
  s.ids = std::move(ids);
  s.excluded = std::move(excluded);
  s.manifest_hash = manifest_hash(spec, s.pool_digest, s.ids);
  return s;
}

// Runs the configured strategy over a pool snapshot.
inline Selection select(const SelectionSpec& spec, const std::vector<PoolEntry>& pool) {
  spec.validate();
  IdList pool_ids;
  pool_ids.reserve(pool.size());
  {
    std::unordered_set<std::string> seen;
    seen.reserve(pool.size());
    for (const auto& e : pool) {
      if (!seen.insert(e.id).second) throw RankingError("duplicate pool id " + e.id);
      pool_ids.push_back(e.id);
    }
  }
  if (pool.empty()) throw RankingError("cannot select from an empty pool");

  IdList excluded;
  std::unordered_map<std::string, std::size_t> lengths;
  ScoreMap difficulty;
  lengths.reserve(pool.size());
  for (const auto& e : pool) {
    if (needs_difficulty(spec.strategy)) {
      if (!e.difficulty) {
        excluded.push_back(e.id);
        continue;
      }
      difficulty.emplace(e.id, *e.difficulty);
    }
    lengths.emplace(e.id, e.length);
  }
  std::sort(excluded.begin(), excluded.end());
  if (lengths.empty()) {
    throw RankingError("no record carries a difficulty score; run the score step first");
  }
  const std::size_t k = spec.k.resolve(lengths.size());

  IdList ids;
  switch (spec.strategy) {
    case Strategy::kJoint: {
      auto rd = rank_by(difficulty, Order::kDescending);
      auto rl = rank_by(lengths, Order::kDescending);
      ids = select_top_k(joint_rank(rd, rl, spec.w), k, true);
      break;
    }
    case Strategy::kLongest:
      ids = select_length_band(lengths, LengthBand::kLongest, k);
      break;
    case Strategy::kMiddle:
      ids = select_length_band(lengths, LengthBand::kMiddle, k);
      break;
    case Strategy::kShortest:
      ids = select_length_band(lengths, LengthBand::kShortest, k);
      break;
    case Strategy::kDifficult:
      ids = select_difficulty_band(difficulty, DifficultyBand::kDifficult, k);
      break;
    case Strategy::kEasy:
      ids = select_difficulty_band(difficulty, DifficultyBand::kEasy, k);
      break;
    case Strategy::kRandom:
      ids = select_random(pool_ids, k, spec.seed);
      break;
    case Strategy::kDiverse: {
      std::vector<CategorizedId> items;
      items.reserve(pool.size());
      for (const auto& e : pool) items.push_back({e.id, e.category});
      ids = select_diverse(items, k, spec.seed);
      break;
    }
  }
  return make_selection(spec, pool_ids, std::move(ids), std::move(excluded));
}

inline nlohmann::ordered_json to_json(const Selection& s) {
  nlohmann::ordered_json j;
  j["strategy"] = std::string(to_string(s.spec.strategy));
  if (s.spec.k.fraction) {
    j["k_fraction"] = *s.spec.k.fraction;
  } else {
    j["k_count"] = *s.spec.k.count;
  }
  j["k"] = s.ids.size();
  j["w"] = s.spec.w;
  j["seed"] = s.spec.seed;
  j["length_unit"] = std::string(trace::to_string(s.spec.length_unit));
  j["tie_break"] = "ascending-id";
  j["pool_size"] = s.pool_size;
  j["pool_digest"] = s.pool_digest;
  j["manifest_hash"] = s.manifest_hash;
  j["excluded"] = s.excluded;
  j["ids"] = s.ids;
  return j;
}

inline void write_manifest(const Selection& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(s).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline Selection read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path);
  try {
    auto j = nlohmann::json::parse(in);
    Selection s;
    s.spec.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("k_fraction")) {
      s.spec.k = KSpec::of_fraction(j["k_fraction"].get<double>());
    } else {
      s.spec.k = KSpec::of_count(j.at("k_count").get<std::size_t>());
    }
    s.spec.w = j.value("w", 0.25);
    s.spec.seed = j.value("seed", std::uint64_t{0});
    s.spec.length_unit = trace::parse_length_unit(j.value("length_unit", "tokens"));
    s.pool_size = j.at("pool_size").get<std::size_t>();
    s.pool_digest = j.at("pool_digest").get<std::string>();
    s.manifest_hash = j.at("manifest_hash").get<std::string>();
    s.ids = j.at("ids").get<IdList>();
    s.excluded = j.value("excluded", IdList{});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest " + path + ": " + e.what());
  }
}

}  // namespace cotsel::ranking
