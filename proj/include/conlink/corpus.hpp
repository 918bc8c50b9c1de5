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

// Annotated mention datasets.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "conlink/error.hpp"
#include "conlink/random.hpp"
#include "conlink/terminology.hpp"
#include "conlink/text.hpp"

namespace conlink {

enum class Split { kTrain, kDev, kTest };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

struct MentionRecord {
  std::string source_id;
  std::string raw_text;
  std::string normalized_text;
  std::set<ConceptId> gold;             // empty means out-of-vocabulary (nil)
  std::vector<std::string> components;  // normalized; one entry unless composite

  bool is_nil() const { return gold.empty(); }
  bool is_composite() const { return components.size() > 1; }

  friend bool operator==(const MentionRecord&, const MentionRecord&) = default;
};

struct Corpus {
  Split split = Split::kTest;
  std::vector<MentionRecord> records;

  std::size_t size() const { return records.size(); }
};

/// Builds a record from raw text, applying normalization and composite
/// splitting. Throws ValidationError when nothing survives normalization.
inline MentionRecord make_record(std::string source_id, std::string raw_text, std::set<ConceptId> gold) {
  MentionRecord rec;
  rec.source_id = std::move(source_id);
  rec.raw_text = std::move(raw_text);
  rec.normalized_text = normalize(rec.raw_text);
  if (rec.normalized_text.empty()) throw ValidationError("mention text is empty after normalization");
  for (const auto& part : split_composite(rec.raw_text)) {
    std::string n = normalize(part);
    if (!n.empty()) rec.components.push_back(std::move(n));
  }
  if (rec.components.empty()) rec.components.push_back(rec.normalized_text);
  rec.gold = std::move(gold);
  return rec;
}

/// Reads `source_id<TAB>raw_text<TAB>CUI1|CUI2|...` rows; the literal
/// `nil` in the third column marks an out-of-vocabulary mention.
inline Corpus parse_corpus(std::istream& in, Split split, const std::string& source = "<corpus>") {
  Corpus corpus;
  corpus.split = split;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = detail::chomp(line);
    if (row.empty() || row.front() == '#' || trim(row).empty()) continue;
    auto cols = detail::split_char(row, '\t');
    if (cols.size() != 3)
      throw ParseError(source, lineno, "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    std::set<ConceptId> gold;
    const std::string gold_col = trim(cols[2]);
    if (gold_col.empty()) throw ParseError(source, lineno, "empty gold column (use \"nil\")");
    if (gold_col != "nil") {
      for (auto c : detail::split_char(gold_col, '|')) {
        if (trim(c).empty()) throw ParseError(source, lineno, "empty concept identifier in gold column");
        gold.insert(ConceptId(c));
      }
    }
    try {
      corpus.records.push_back(make_record(trim(cols[0]), std::string(cols[1]), std::move(gold)));
    } catch (const ValidationError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open corpus file " + path);
  return parse_corpus(in, split, path);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records) {
    out << r.source_id << '\t' << r.raw_text << '\t';
    if (r.gold.empty()) {
      out << "nil";
    } else {
      bool first = true;
      for (const auto& g : r.gold) {
        out << (first ? "" : "|") << g.str();
        first = false;
      }
    }
    out << '\n';
  }
}

/// Drops records whose normalized text repeats an earlier record or occurs
/// in `train`. Survivor order is preserved.
inline Corpus refine(const Corpus& test, const Corpus* train = nullptr) {
  std::unordered_set<std::string> seen;
  if (train)
    for (const auto& r : train->records) seen.insert(r.normalized_text);
  Corpus out;
  out.split = test.split;
  for (const auto& r : test.records)
    if (seen.insert(r.normalized_text).second) out.records.push_back(r);
  return out;
}

/// Seeded random partition: `n` records (original order kept) and the rest.
inline std::pair<Corpus, Corpus> sample_split(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto picked = sample_without_replacement(corpus.size(), n, rng);
  std::vector<bool> chosen(corpus.size(), false);
  for (auto i : picked) chosen[i] = true;
  Corpus first, rest;
  first.split = Split::kDev;
  rest.split = corpus.split;
  for (std::size_t i = 0; i < corpus.size(); ++i) (chosen[i] ? first : rest).records.push_back(corpus.records[i]);
  return {std::move(first), std::move(rest)};
}

/// True when every gold concept of the record is in the terminology. Nil
/// records are always covered.
inline bool gold_covered(const MentionRecord& rec, const Terminology& t) {
  return std::all_of(rec.gold.begin(), rec.gold.end(), [&](const ConceptId& c) { return t.contains(c); });
}

}  // namespace conlink
