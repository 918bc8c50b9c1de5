// Copyright 2026 The conlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Concept vocabulary: identifiers, their synonym names and the direct
// parent relation. Immutable once constructed.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conlink/error.hpp"
#include "conlink/random.hpp"
#include "conlink/text.hpp"

namespace conlink {

class ConceptId {
 public:
  ConceptId() = default;
  explicit ConceptId(std::string_view value) : value_(trim(value)) {
    if (value_.empty()) throw ValidationError("empty concept identifier");
  }

  const std::string& str() const { return value_; }

  friend auto operator<=>(const ConceptId&, const ConceptId&) = default;
  friend bool operator==(const ConceptId&, const ConceptId&) = default;

 private:
  std::string value_;
};

struct ConceptName {
  std::string surface;  // normalized
  ConceptId cui;

  friend bool operator==(const ConceptName&, const ConceptName&) = default;
};

using NameId = std::size_t;

class Terminology {
 public:
  using ParentMap = std::map<ConceptId, std::set<ConceptId>>;

  Terminology() = default;

  // Surfaces must already be normalized. Duplicate (cui, surface) pairs are
  // collapsed to the first occurrence. Throws ValidationError on an empty
  // vocabulary, an unknown parent or a cycle.
  Terminology(std::vector<ConceptName> names, ParentMap parents) {
    for (auto& n : names) {
      if (n.surface.empty()) throw ValidationError("empty concept name for " + n.cui.str());
      auto& entry = concepts_[n.cui];
      const bool dup = std::any_of(entry.names.begin(), entry.names.end(),
                                   [&](NameId id) { return names_[id].surface == n.surface; });
      if (dup) continue;
      if (entry.names.empty()) order_.push_back(n.cui);
      entry.names.push_back(names_.size());
      names_.push_back(std::move(n));
    }
    if (names_.empty()) throw ValidationError("empty terminology");

    for (auto& [child, ps] : parents) {
      auto it = concepts_.find(child);
      if (it == concepts_.end()) throw ValidationError("parent list given for unknown concept " + child.str());
      for (const auto& p : ps) {
        auto pit = concepts_.find(p);
        if (pit == concepts_.end())
          throw ValidationError("concept " + child.str() + " references unknown parent " + p.str());
        it->second.parents.push_back(p);
        pit->second.children.push_back(child);
      }
    }
    for (auto& [id, entry] : concepts_) {
      std::sort(entry.parents.begin(), entry.parents.end());
      std::sort(entry.children.begin(), entry.children.end());
    }
    check_acyclic();
  }

  std::span<const ConceptName> names() const { return names_; }
  const ConceptName& name(NameId id) const { return names_.at(id); }
  std::size_t name_count() const { return names_.size(); }
  std::size_t concept_count() const { return order_.size(); }

  // Concepts in order of first appearance.
  std::span<const ConceptId> concepts() const { return order_; }

  bool contains(const ConceptId& cui) const { return concepts_.count(cui) > 0; }

  std::span<const NameId> name_ids(const ConceptId& cui) const { return entry(cui).names; }
  std::span<const ConceptId> direct_parents(const ConceptId& cui) const { return entry(cui).parents; }
  std::span<const ConceptId> direct_children(const ConceptId& cui) const { return entry(cui).children; }

  // Concepts sharing at least one direct parent with cui, excluding cui.
  std::vector<ConceptId> siblings(const ConceptId& cui) const {
    std::set<ConceptId> out;
    for (const auto& p : entry(cui).parents)
      for (const auto& c : entry(p).children)
        if (c != cui) out.insert(c);
    return {out.begin(), out.end()};
  }

  // Up to k names of the direct parents; seeded uniform choice when there
  // are more than k. Result is in candidate order (parents by id, then
  // names in file order).
  std::vector<NameId> parent_name_ids(const ConceptId& cui, std::size_t k, std::uint64_t seed) const {
    std::vector<NameId> pool;
    for (const auto& p : entry(cui).parents) append_names(p, pool);
    return choose(std::move(pool), k, derive_seed(seed, {io_hash(cui), k, 1}));
  }

  std::vector<NameId> sibling_name_ids(const ConceptId& cui, std::size_t k, std::uint64_t seed) const {
    std::vector<NameId> pool;
    for (const auto& s : siblings(cui)) append_names(s, pool);
    return choose(std::move(pool), k, derive_seed(seed, {io_hash(cui), k, 2}));
  }

  std::vector<ConceptName> parents_of(const ConceptId& cui, std::size_t k, std::uint64_t seed = 0) const {
    return to_names(parent_name_ids(cui, k, seed));
  }

  std::vector<ConceptName> siblings_of(const ConceptId& cui, std::size_t k, std::uint64_t seed = 0) const {
    return to_names(sibling_name_ids(cui, k, seed));
  }

  ParentMap parent_map() const {
    ParentMap out;
    for (const auto& [id, entry] : concepts_)
      if (!entry.parents.empty()) out[id] = {entry.parents.begin(), entry.parents.end()};
    return out;
  }

  friend bool operator==(const Terminology& a, const Terminology& b) {
    return a.names_ == b.names_ && a.parent_map() == b.parent_map();
  }

 private:
  struct Entry {
    std::vector<NameId> names;
    std::vector<ConceptId> parents;
    std::vector<ConceptId> children;
  };

  static std::uint64_t io_hash(const ConceptId& cui) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : cui.str()) h = (h ^ c) * 0x100000001b3ULL;
    return h;
  }

  const Entry& entry(const ConceptId& cui) const {
    auto it = concepts_.find(cui);
    if (it == concepts_.end()) throw NotFoundError("unknown concept " + cui.str());
    return it->second;
  }

  void append_names(const ConceptId& cui, std::vector<NameId>& pool) const {
    const auto& ids = entry(cui).names;
    pool.insert(pool.end(), ids.begin(), ids.end());
  }

  static std::vector<NameId> choose(std::vector<NameId> pool, std::size_t k, std::uint64_t seed) {
    if (pool.size() <= k) return pool;
    Rng rng(seed);
    auto picks = sample_without_replacement(pool.size(), k, rng);
    std::sort(picks.begin(), picks.end());
    std::vector<NameId> out;
    out.reserve(k);
    for (auto p : picks) out.push_back(pool[p]);
    return out;
  }

  std::vector<ConceptName> to_names(const std::vector<NameId>& ids) const {
    std::vector<ConceptName> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(names_[id]);
    return out;
  }

  void check_acyclic() const {
    enum class Mark : std::uint8_t { kNone, kActive, kDone };
    std::map<ConceptId, Mark> mark;
    for (const auto& root : order_) {
      if (mark[root] == Mark::kDone) continue;
      // Iterative DFS over parent edges.
      std::vector<std::pair<const ConceptId*, std::size_t>> stack{{&root, 0}};
      mark[root] = Mark::kActive;
      while (!stack.empty()) {
        auto& [node, next] = stack.back();
        const auto& ps = entry(*node).parents;
        if (next == ps.size()) {
          mark[*node] = Mark::kDone;
          stack.pop_back();
          continue;
        }
        const ConceptId& p = ps[next++];
        Mark& m = mark[p];
        if (m == Mark::kActive) throw ValidationError("cycle in parent relation through " + p.str());
        if (m == Mark::kNone) {
          m = Mark::kActive;
          stack.push_back({&p, 0});
        }
      }
    }
  }

  std::vector<ConceptName> names_;
  std::vector<ConceptId> order_;
  std::map<ConceptId, Entry> concepts_;
};

namespace detail {

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == s.npos ? s.npos : pos - start));
    if (pos == s.npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

/// Reads `CUI<TAB>name[<TAB>parent1|parent2...]` rows. Lines starting with
/// '#' and blank lines are skipped. Parents given on several rows of the
/// same CUI are merged.
inline Terminology parse_terminology(std::istream& in, const std::string& source = "<terminology>") {
  std::vector<ConceptName> names;
  Terminology::ParentMap parents;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = detail::chomp(line);
    if (row.empty() || row.front() == '#') continue;
    if (trim(row).empty()) continue;
    auto cols = detail::split_char(row, '\t');
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(source, lineno, "expected 2 or 3 tab-separated columns, got " + std::to_string(cols.size()));
    if (trim(cols[0]).empty()) throw ParseError(source, lineno, "empty concept identifier");
    ConceptId cui(cols[0]);
    std::string surface = normalize(cols[1]);
    if (surface.empty()) throw ParseError(source, lineno, "concept name is empty after normalization");
    if (cols.size() == 3) {
      auto& ps = parents[cui];
      for (auto p : detail::split_char(cols[2], '|'))
        if (!trim(p).empty()) ps.insert(ConceptId(p));
      if (ps.empty()) parents.erase(cui);
    }
    names.push_back({std::move(surface), std::move(cui)});
  }
  if (names.empty()) throw ValidationError(source + ": empty terminology");
  return Terminology(std::move(names), std::move(parents));
}

inline Terminology load_terminology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open terminology file " + path);
  return parse_terminology(in, path);
}

/// Writes a file that parse_terminology reads back into an equal object.
inline void write_terminology(std::ostream& out, const Terminology& t) {
  std::set<ConceptId> parents_written;
  for (const auto& n : t.names()) {
    out << n.cui.str() << '\t' << n.surface;
    auto ps = t.direct_parents(n.cui);
    if (!ps.empty() && parents_written.insert(n.cui).second) {
      out << '\t';
      for (std::size_t i = 0; i < ps.size(); ++i) out << (i ? "|" : "") << ps[i].str();
    }
    out << '\n';
  }
}

}  // namespace conlink
