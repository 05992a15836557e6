#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tann/detail/text.hpp"
#include "tann/errors.hpp"
#include "tann/textproc.hpp"

namespace tann {

enum class Linkage { average, complete, single };

inline std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

inline Linkage parse_linkage(std::string_view s) {
  if (s == "average") return Linkage::average;
  if (s == "complete") return Linkage::complete;
  if (s == "single") return Linkage::single;
  throw ArgumentError("unknown linkage '" + std::string(s) + "' (expected average|complete|single)");
}

/**
 * Partition of the training ids into themes plus the ids that were pruned.
 * Themes are ordered by the input position of their first member; members
 * keep input order. `dropped` is sorted lexicographically.
 */
struct ThemeModel {
  std::vector<std::vector<std::string>> themes;
  std::vector<std::string> dropped;
  double cutoff = 0.25;
  Linkage linkage = Linkage::average;

  std::size_t retained_count() const {
    std::size_t n = 0;
    for (const auto& t : themes) n += t.size();
    return n;
  }
  std::size_t total_count() const { return retained_count() + dropped.size(); }
  double retained_fraction() const {
    const auto total = total_count();
    return total == 0 ? 0.0 : static_cast<double>(retained_count()) / static_cast<double>(total);
  }
};

namespace detail {

// Similarity between a merged cluster (a ∪ b) and k, from the pre-merge values.
inline double linkage_update(Linkage linkage, double s_ak, double s_bk, std::size_t n_a, std::size_t n_b) {
  switch (linkage) {
    case Linkage::complete: return std::min(s_ak, s_bk);
    case Linkage::single: return std::max(s_ak, s_bk);
    case Linkage::average: break;
  }
  return (static_cast<double>(n_a) * s_ak + static_cast<double>(n_b) * s_bk) / static_cast<double>(n_a + n_b);
}

// Slack on the cutoff comparison so that parallel rows (cosine 1 up to rounding)
// always merge at cutoff 1.
inline constexpr double kCutoffSlack = 1e-12;

}  // namespace detail

/**
 * Agglomerative clustering of tfIdf rows under cosine similarity.
 *
 * Starts from singletons and repeatedly merges the most similar pair of
 * clusters (ties: lexicographically smallest pair of cluster slots) while that
 * similarity is >= cutoff. All-zero rows go straight to `dropped`.
 *
 * Keeps a dense n x n similarity matrix (8 n^2 bytes; ~3.2 GB at n = 20000)
 * plus a cached best neighbour per cluster, so a merge costs O(n) except for
 * the rows whose cached neighbour disappeared.
 */
inline ThemeModel cluster_themes(const TfidfMatrix& tfidf, const std::vector<std::string>& ids, double cutoff,
                                 Linkage linkage = Linkage::average) {
  if (!(cutoff > 0.0 && cutoff <= 1.0))
    throw ArgumentError("cutoff must lie in (0,1], got " + detail::format_roundtrip(cutoff));
  if (tfidf.rows.size() != ids.size()) throw ShapeError("tfIdf row count does not match id count");

  ThemeModel model;
  model.cutoff = cutoff;
  model.linkage = linkage;

  std::vector<std::size_t> active;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (squared_norm(tfidf.rows[r]) > 0.0)
      active.push_back(r);
    else
      model.dropped.push_back(ids[r]);
  }
  const std::size_t n = active.size();

  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sim[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(tfidf.rows[active[i]], tfidf.rows[active[j]]);
      sim[i * n + j] = s;
      sim[j * n + i] = s;
    }
  }

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<std::size_t> best(n, none);
  std::vector<double> best_sim(n, -std::numeric_limits<double>::infinity());

  auto rescan = [&](std::size_t i) {
    best[i] = none;
    best_sim[i] = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !alive[j]) continue;
      if (sim[i * n + j] > best_sim[i]) {
        best_sim[i] = sim[i * n + j];
        best[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  while (true) {
    std::size_t pick = none;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i] || best[i] == none) continue;
      if (pick == none || best_sim[i] > best_sim[pick]) pick = i;
    }
    if (pick == none || best_sim[pick] < cutoff - detail::kCutoffSlack) break;

    const std::size_t a = std::min(pick, best[pick]);
    const std::size_t b = std::max(pick, best[pick]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == a || k == b) continue;
      const double s = detail::linkage_update(linkage, sim[a * n + k], sim[b * n + k], size[a], size[b]);
      sim[a * n + k] = s;
      sim[k * n + a] = s;
    }
    size[a] += size[b];
    alive[b] = false;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();

    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == a) continue;
      if (best[k] == a || best[k] == b) {
        rescan(k);
      } else {
        const double s = sim[k * n + a];
        if (s > best_sim[k] || (s == best_sim[k] && a < best[k])) {
          best_sim[k] = s;
          best[k] = a;
        }
      }
    }
    rescan(a);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    auto m = members[i];
    std::sort(m.begin(), m.end());
    std::vector<std::string> theme;
    theme.reserve(m.size());
    for (auto idx : m) theme.push_back(ids[active[idx]]);
    model.themes.push_back(std::move(theme));
  }
  std::sort(model.dropped.begin(), model.dropped.end());
  return model;
}

/**
 * Drops the smallest themes (ties: lexicographically smallest member first)
 * for as long as the retained fraction of all training ids stays >= coverage.
 * The last theme is never dropped.
 */
inline ThemeModel prune_themes(const ThemeModel& model, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0))
    throw ArgumentError("coverage must lie in (0,1], got " + detail::format_roundtrip(coverage));
  std::vector<std::size_t> order(model.themes.size());
  std::vector<std::string> smallest(model.themes.size());
  for (std::size_t t = 0; t < model.themes.size(); ++t) {
    order[t] = t;
    smallest[t] = *std::min_element(model.themes[t].begin(), model.themes[t].end());
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (model.themes[x].size() != model.themes[y].size()) return model.themes[x].size() < model.themes[y].size();
    return smallest[x] < smallest[y];
  });

  const double total = static_cast<double>(model.total_count());
  std::size_t retained = model.retained_count();
  std::vector<bool> drop(model.themes.size(), false);
  std::size_t remaining = model.themes.size();
  for (std::size_t t : order) {
    if (remaining <= 1) break;
    const std::size_t after = retained - model.themes[t].size();
    if (static_cast<double>(after) / total < coverage) break;
    drop[t] = true;
    retained = after;
    --remaining;
  }

  ThemeModel out;
  out.cutoff = model.cutoff;
  out.linkage = model.linkage;
  out.dropped = model.dropped;
  for (std::size_t t = 0; t < model.themes.size(); ++t) {
    if (drop[t])
      out.dropped.insert(out.dropped.end(), model.themes[t].begin(), model.themes[t].end());
    else
      out.themes.push_back(model.themes[t]);
  }
  std::sort(out.dropped.begin(), out.dropped.end());
  return out;
}

struct ThemeStats {
  std::size_t themes = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  double retained_fraction = 0.0;
  std::map<std::size_t, std::size_t> size_histogram;  // theme size -> number of themes
};

inline ThemeStats theme_stats(const ThemeModel& model) {
  ThemeStats s;
  s.themes = model.themes.size();
  s.retained = model.retained_count();
  s.dropped = model.dropped.size();
  s.retained_fraction = model.retained_fraction();
  for (const auto& t : model.themes) ++s.size_histogram[t.size()];
  return s;
}

inline std::string format_theme_stats(const ThemeStats& s) {
  std::string out;
  out += "themes\t" + std::to_string(s.themes) + "\n";
  out += "retained_images\t" + std::to_string(s.retained) + "\n";
  out += "dropped_images\t" + std::to_string(s.dropped) + "\n";
  out += "retained_fraction\t" + detail::format_fixed(s.retained_fraction) + "\n";
  for (const auto& [size, count] : s.size_histogram)
    out += "size\t" + std::to_string(size) + "\t" + std::to_string(count) + "\n";
  return out;
}

// themes.tsv: header comment with clustering parameters, then one line per theme.
inline std::string format_themes(const ThemeModel& model) {
  auto join = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i].find(',') != std::string::npos)
        throw FormatError("image id '" + ids[i] + "' contains ',' and cannot be written to themes.tsv");
      if (i) s += ',';
      s += ids[i];
    }
    return s;
  };
  std::string out = "# cutoff=" + detail::format_fixed(model.cutoff) + " linkage=" + to_string(model.linkage) + "\n";
  for (std::size_t t = 0; t < model.themes.size(); ++t) out += std::to_string(t) + "\t" + join(model.themes[t]) + "\n";
  if (!model.dropped.empty()) out += "-1\t" + join(model.dropped) + "\n";
  return out;
}

inline ThemeModel parse_themes(std::string_view content, const std::string& origin = "<themes>") {
  ThemeModel model;
  // Header parameters, if present.
  if (content.rfind("# ", 0) == 0) {
    auto header = content.substr(2, content.find('\n') - 2);
    for (auto tok : detail::split_ws(header)) {
      auto eq = tok.find('=');
      if (eq == std::string_view::npos) continue;
      auto key = tok.substr(0, eq);
      auto value = tok.substr(eq + 1);
      if (key == "cutoff") detail::parse_double(value, model.cutoff);
      if (key == "linkage") model.linkage = parse_linkage(value);
    }
  }
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& line : detail::content_lines(content)) {
    auto tab = line.text.find('\t');
    if (tab == std::string_view::npos)
      throw FormatError(origin + ":" + std::to_string(line.number) + ": expected '<index>\\t<ids>'");
    long index = 0;
    if (!detail::parse_int(detail::trim(line.text.substr(0, tab)), index) || index < -1)
      throw FormatError(origin + ":" + std::to_string(line.number) + ": invalid theme index");
    std::vector<std::string> ids;
    auto list = detail::trim(line.text.substr(tab + 1));
    if (!list.empty()) {
      for (auto id : detail::split_on(list, ',')) {
        std::string s(detail::trim(id));
        if (s.empty()) throw FormatError(origin + ":" + std::to_string(line.number) + ": empty image id");
        if (!seen.emplace(s, line.number).second)
          throw FormatError(origin + ":" + std::to_string(line.number) + ": image id '" + s +
                            "' appears in more than one theme");
        ids.push_back(std::move(s));
      }
    }
    if (index == -1) {
      model.dropped.insert(model.dropped.end(), ids.begin(), ids.end());
    } else {
      if (static_cast<std::size_t>(index) != model.themes.size())
        throw FormatError(origin + ":" + std::to_string(line.number) + ": theme indices must be consecutive from 0");
      if (ids.empty()) throw FormatError(origin + ":" + std::to_string(line.number) + ": empty theme");
      model.themes.push_back(std::move(ids));
    }
  }
  if (model.themes.empty()) throw FormatError(origin + ": no themes");
  std::sort(model.dropped.begin(), model.dropped.end());
  return model;
}

inline ThemeModel load_themes(const std::string& path) { return parse_themes(detail::read_file(path), path); }

/// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(const std::vector<long>& a, const std::vector<long>& b) {
  if (a.size() != b.size()) throw ShapeError("labelings differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<long, long>, double> joint;
  std::map<long, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += c2(v);
  for (const auto& [k, v] : ra) sum_a += c2(v);
  for (const auto& [k, v] : rb) sum_b += c2(v);
  const double expected = sum_a * sum_b / c2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace tann
