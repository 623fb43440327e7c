#pragma once

// Descriptive statistics over trace metrics and generated solutions, and
// overlap between selections. Tables are tab-separated with a header row.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cotsel/error.hpp"
#include "cotsel/ranking.hpp"
#include "cotsel/trace.hpp"
#include "cotsel/trace_metrics.hpp"
#include "json.hpp"

namespace cotsel::report {

struct BinStats {
  std::size_t count = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  std::vector<double> mean_keyword;  // lexicon order
  double mean_rethink_total = 0.0;
  double mean_rethink_density = 0.0;
};

struct BinnedStats {
  trace::LengthUnit unit = trace::LengthUnit::kTokens;
  // Bin i covers [bin_edges[i], bin_edges[i+1]); the last bin also
  // includes its upper edge, the maximum observed length.
  std::vector<std::size_t> bin_edges;
  std::vector<std::string> keywords;
  std::vector<BinStats> per_bin;
  std::vector<std::string> warnings;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& b : per_bin) t += b.count;
    return t;
  }
};

// Equal-population bins by trace length over records that have a trace.
// Cut points are the lengths at positions floor(b * N / n_bins) of the
// sorted order; repeated cut points collapse, so ties never straddle bins.
inline BinnedStats length_binned_rethink(const std::vector<trace::TraceMetrics>& metrics,
                                         std::size_t n_bins,
                                         trace::LengthUnit unit = trace::LengthUnit::kTokens) {
  if (n_bins < 2) throw MetricError("length binning needs at least 2 bins");
  std::vector<const trace::TraceMetrics*> rows;
  for (const auto& m : metrics) {
    if (m.has_trace) rows.push_back(&m);
  }
  if (rows.size() < n_bins) {
    throw MetricError("length binning with " + std::to_string(n_bins) + " bins needs at least " +
                      std::to_string(n_bins) + " records with traces, got " +
                      std::to_string(rows.size()));
  }
  std::sort(rows.begin(), rows.end(), [unit](const auto* a, const auto* b) {
    if (a->length(unit) != b->length(unit)) return a->length(unit) < b->length(unit);
    return a->record_id < b->record_id;
  });
  const std::size_t n = rows.size();
  const std::size_t lo = rows.front()->length(unit);
  const std::size_t hi = rows.back()->length(unit);

  BinnedStats out;
  out.unit = unit;
  for (const auto& e : rows.front()->keyword_counts.entries) out.keywords.push_back(e.first);
  out.bin_edges.push_back(lo);
  for (std::size_t b = 1; b < n_bins; ++b) {
    const std::size_t cut = rows[b * n / n_bins]->length(unit);
    if (cut > out.bin_edges.back()) out.bin_edges.push_back(cut);
  }
  const std::size_t effective = out.bin_edges.size();
  out.bin_edges.push_back(hi);
  if (effective < n_bins) {
    out.warnings.push_back("only " + std::to_string(effective) + " distinct length bin(s) out of " +
                           std::to_string(n_bins) + " requested");
  }

  out.per_bin.assign(effective, BinStats{});
  for (auto& b : out.per_bin) b.mean_keyword.assign(out.keywords.size(), 0.0);
  for (const auto* m : rows) {
    const std::size_t len = m->length(unit);
    const auto upper =
        std::upper_bound(out.bin_edges.begin(), out.bin_edges.begin() + static_cast<std::ptrdiff_t>(effective), len);
    const std::size_t bin = static_cast<std::size_t>(upper - out.bin_edges.begin()) - 1;
    auto& b = out.per_bin[bin];
    if (b.count == 0 || len < b.min_length) b.min_length = len;
    b.max_length = std::max(b.max_length, len);
    ++b.count;
    for (std::size_t k = 0; k < out.keywords.size(); ++k) {
      b.mean_keyword[k] += static_cast<double>(m->keyword_counts.entries[k].second);
    }
    b.mean_rethink_total += static_cast<double>(m->rethink_total);
    b.mean_rethink_density += m->rethink_density;
  }
  for (auto& b : out.per_bin) {
    if (b.count == 0) continue;
    const double c = static_cast<double>(b.count);
    for (auto& v : b.mean_keyword) v /= c;
    b.mean_rethink_total /= c;
    b.mean_rethink_density /= c;
  }
  return out;
}

// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw MetricError("correlation inputs differ in length");
  if (x.size() < 2) throw MetricError("correlation needs at least 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw MetricError("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline constexpr std::size_t kMinCorrelationRecords = 10;

// Spearman rho between trace length and rethink_total over records with a
// non-empty trace.
inline double length_rethink_correlation(const std::vector<trace::TraceMetrics>& metrics,
                                         trace::LengthUnit unit = trace::LengthUnit::kTokens,
                                         std::size_t min_records = kMinCorrelationRecords) {
  std::vector<double> len, tot;
  for (const auto& m : metrics) {
    if (!m.has_trace || m.length(unit) == 0) continue;
    len.push_back(static_cast<double>(m.length(unit)));
    tot.push_back(static_cast<double>(m.rethink_total));
  }
  if (len.size() < min_records) {
    throw MetricError("correlation needs at least " + std::to_string(min_records) +
                      " records with non-empty traces, got " + std::to_string(len.size()));
  }
  return spearman(len, tot);
}

struct GroupRethinkStats {
  std::string group;
  std::size_t solutions = 0;
  trace::KeywordCounts totals;
  std::vector<double> per_solution_mean;  // lexicon order
  std::size_t rethink_total = 0;
  double mean_rethink = 0.0;
  double mean_chars = 0.0;
  double mean_words = 0.0;
};

using SolutionGroups = std::vector<std::pair<std::string, std::vector<std::string>>>;

// Keyword usage of generated solutions, counted over the whole solution
// text, with output lengths alongside.
inline std::vector<GroupRethinkStats> generation_rethink_stats(const SolutionGroups& groups,
                                                               const trace::RethinkLexicon& lexicon) {
  std::vector<GroupRethinkStats> out;
  for (const auto& [name, solutions] : groups) {
    GroupRethinkStats g;
    g.group = name;
    g.solutions = solutions.size();
    g.totals = trace::KeywordCounts::zeros(lexicon);
    double chars = 0, words = 0;
    for (const auto& s : solutions) {
      const auto c = trace::count_rethinking(s, lexicon);
      for (std::size_t k = 0; k < c.entries.size(); ++k) {
        g.totals.entries[k].second += c.entries[k].second;
      }
      chars += static_cast<double>(trace::measure_length(s, trace::LengthUnit::kChars));
      words += static_cast<double>(trace::measure_length(s, trace::LengthUnit::kWords));
    }
    g.rethink_total = g.totals.total();
    const double n = std::max<double>(1.0, static_cast<double>(g.solutions));
    for (const auto& e : g.totals.entries) {
      g.per_solution_mean.push_back(static_cast<double>(e.second) / n);
    }
    g.mean_rethink = static_cast<double>(g.rethink_total) / n;
    g.mean_chars = chars / n;
    g.mean_words = words / n;
    out.push_back(std::move(g));
  }
  return out;
}

// Lines of {"group": ..., "solution": text} or {"group": ..., "solutions": [...]};
// groups keep their first-appearance order.
inline SolutionGroups read_generations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read generations file " + path);
  SolutionGroups groups;
  std::map<std::string, std::size_t> index;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    if (!j.is_object() || !j.contains("group") || !j["group"].is_string()) continue;
    const auto name = j["group"].get<std::string>();
    auto [it, inserted] = index.try_emplace(name, groups.size());
    if (inserted) groups.emplace_back(name, std::vector<std::string>{});
    auto& bucket = groups[it->second].second;
    if (j.contains("solution") && j["solution"].is_string()) {
      bucket.push_back(j["solution"].get<std::string>());
    }
    if (j.contains("solutions") && j["solutions"].is_array()) {
      for (const auto& s : j["solutions"]) {
        if (s.is_string()) bucket.push_back(s.get<std::string>());
      }
    }
  }
  return groups;
}

struct OverlapReport {
  std::string a;
  std::string b;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t shared = 0;
  double jaccard = 0.0;
};

inline OverlapReport selection_overlap(const ranking::Selection& a, const ranking::Selection& b) {
  if (a.pool_digest != b.pool_digest) {
    throw MetricError("selections come from different pools (" + a.pool_digest + " vs " +
                      b.pool_digest + ")");
  }
  std::unordered_set<std::string> sa(a.ids.begin(), a.ids.end());
  std::unordered_set<std::string> sb(b.ids.begin(), b.ids.end());
  OverlapReport r;
  r.a = a.manifest_hash;
  r.b = b.manifest_hash;
  r.size_a = sa.size();
  r.size_b = sb.size();
  for (const auto& id : sa) r.shared += sb.count(id);
  const std::size_t uni = sa.size() + sb.size() - r.shared;
  r.jaccard = uni == 0 ? 1.0 : static_cast<double>(r.shared) / static_cast<double>(uni);
  return r;
}

// ---------------------------------------------------------------------------
// Table writers
// ---------------------------------------------------------------------------

namespace detail {
inline std::ofstream open_table(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}
}  // namespace detail

inline void write_binned_table(const BinnedStats& s, const std::string& path) {
  auto out = detail::open_table(path);
  out << "bin\tlength_from\tlength_to\tmin_length\tmax_length\tcount\tmean_rethink_total\t"
         "mean_rethink_density";
  for (const auto& k : s.keywords) out << "\tmean_" << k;
  out << '\n';
  for (std::size_t i = 0; i < s.per_bin.size(); ++i) {
    const auto& b = s.per_bin[i];
    out << i << '\t' << s.bin_edges[i] << '\t' << s.bin_edges[i + 1] << '\t' << b.min_length
        << '\t' << b.max_length << '\t' << b.count << '\t'
        << trace::format_double(b.mean_rethink_total) << '\t'
        << trace::format_double(b.mean_rethink_density);
    for (double v : b.mean_keyword) out << '\t' << trace::format_double(v);
    out << '\n';
  }
}

inline void write_generation_table(const std::vector<GroupRethinkStats>& rows,
                                   const std::string& path) {
  auto out = detail::open_table(path);
  out << "group\tsolutions\trethink_total\tmean_rethink\tmean_chars\tmean_words";
  if (!rows.empty()) {
    for (const auto& e : rows.front().totals.entries) out << "\ttotal_" << e.first;
    for (const auto& e : rows.front().totals.entries) out << "\tmean_" << e.first;
  }
  out << '\n';
  for (const auto& g : rows) {
    out << g.group << '\t' << g.solutions << '\t' << g.rethink_total << '\t'
        << trace::format_double(g.mean_rethink) << '\t' << trace::format_double(g.mean_chars)
        << '\t' << trace::format_double(g.mean_words);
    for (const auto& e : g.totals.entries) out << '\t' << e.second;
    for (double m : g.per_solution_mean) out << '\t' << trace::format_double(m);
    out << '\n';
  }
}

inline void write_overlap_table(const std::vector<OverlapReport>& rows, const std::string& path) {
  auto out = detail::open_table(path);
  out << "a\tb\tsize_a\tsize_b\tshared\tjaccard\n";
  for (const auto& r : rows) {
    out << r.a << '\t' << r.b << '\t' << r.size_a << '\t' << r.size_b << '\t' << r.shared << '\t'
        << trace::format_double(r.jaccard) << '\n';
  }
}

}  // namespace cotsel::report
