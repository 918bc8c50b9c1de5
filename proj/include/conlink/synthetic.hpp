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

// Seeded synthetic benchmark: a three-level concept taxonomy with
// pseudo-word synonyms, and mentions that are synonyms with a few random
// character edits. Optionally adds mentions of concepts that are left out
// of the terminology (nil gold).

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "conlink/corpus.hpp"
#include "conlink/random.hpp"
#include "conlink/terminology.hpp"

namespace conlink::synthetic {

struct Config {
  std::size_t roots = 8;
  std::size_t mids_per_root = 4;
  std::size_t leaves_per_mid = 5;
  std::size_t synonyms = 5;
  std::size_t mentions_per_concept = 10;
  std::size_t min_edits = 1;
  std::size_t max_edits = 2;
  std::size_t min_syllables = 2;
  std::size_t max_syllables = 4;
  // Generic names of siblings end in a shared family syllable.
  bool family_suffix = true;
  double train_fraction = 0.7;
  double dev_fraction = 0.1;
  // Share of nil-gold mentions in dev and test; they name concepts absent
  // from the terminology.
  double nil_rate = 0.0;
  std::uint64_t seed = 7;

  std::size_t concept_count() const { return roots + roots * mids_per_root + roots * mids_per_root * leaves_per_mid; }
};

struct Benchmark {
  Terminology terminology;
  Corpus train, dev, test;
};

namespace detail {

inline constexpr std::string_view kOnsets[] = {"b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cl", "tr", "st", "ph"};
inline constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "y", "ae", "io"};
inline constexpr std::string_view kCodas[] = {"", "", "", "n", "l", "x", "r", "m", "s", "t"};

class WordMaker {
 public:
  WordMaker(std::uint64_t seed, const Config& cfg) : rng_(seed), cfg_(cfg) {}

  std::string fresh(std::string_view suffix = {}) {
    while (true) {
      std::string w = word();
      w += suffix;
      if (used_.insert(w).second) return w;
    }
  }

  std::string syllable() {
    std::string w;
    w += kOnsets[uniform_below(rng_, std::size(kOnsets))];
    w += kVowels[uniform_below(rng_, std::size(kVowels))];
    w += kCodas[uniform_below(rng_, std::size(kCodas))];
    return w;
  }

 private:
  std::string word() {
    const std::size_t n = cfg_.min_syllables + uniform_below(rng_, cfg_.max_syllables - cfg_.min_syllables + 1);
    std::string w;
    for (std::size_t s = 0; s < n; ++s) w += syllable();
    return w;
  }

  Rng rng_;
  const Config& cfg_;
  std::unordered_set<std::string> used_;
};

inline std::string edit(std::string s, std::size_t edits, Rng& rng) {
  static constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
  for (std::size_t e = 0; e < edits; ++e) {
    const auto op = uniform_below(rng, s.size() > 2 ? 3 : 2);
    const char c = kLetters[uniform_below(rng, kLetters.size())];
    if (op == 0) {
      s[uniform_below(rng, s.size())] = c;
    } else if (op == 1) {
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, s.size() + 1)), c);
    } else {
      s.erase(s.begin() + static_cast<std::ptrdiff_t>(uniform_below(rng, s.size())));
    }
  }
  return s;
}

}  // namespace detail

inline Benchmark generate(const Config& cfg) {
  detail::WordMaker words(derive_seed(cfg.seed, {1}), cfg);
  Rng rng(derive_seed(cfg.seed, {2}));

  struct Concept {
    std::string id;
    std::vector<std::string> names;
  };
  std::vector<Concept> concepts;
  std::vector<ConceptName> names;
  Terminology::ParentMap parents;

  const auto make_concept = [&](const std::string& id, const std::string& suffix) {
    Concept c{id, {}};
    for (std::size_t s = 0; s < cfg.synonyms; ++s) c.names.push_back(words.fresh(s == 0 ? suffix : ""));
    return c;
  };
  const auto add = [&](Concept c, const std::string* parent) {
    for (const auto& n : c.names) names.push_back({n, ConceptId(c.id)});
    if (parent) parents[ConceptId(c.id)].insert(ConceptId(*parent));
    concepts.push_back(std::move(c));
  };

  std::size_t serial = 0;
  const auto next_id = [&] {
    char buf[16];
    std::snprintf(buf, sizeof buf, "C%05zu", ++serial);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < cfg.roots; ++r) {
    const std::string root = next_id();
    add(make_concept(root, ""), nullptr);
    for (std::size_t m = 0; m < cfg.mids_per_root; ++m) {
      const std::string mid = next_id();
      const std::string family = cfg.family_suffix ? words.syllable() : std::string();
      add(make_concept(mid, family), &root);
      for (std::size_t l = 0; l < cfg.leaves_per_mid; ++l) add(make_concept(next_id(), family), &mid);
    }
  }

  Benchmark b;
  b.terminology = Terminology(names, parents);

  const auto edits = [&] { return cfg.min_edits + uniform_below(rng, cfg.max_edits - cfg.min_edits + 1); };
  std::size_t mention_serial = 0;
  const auto mention_id = [&] {
    char buf[24];
    std::snprintf(buf, sizeof buf, "M%06zu", ++mention_serial);
    return std::string(buf);
  };

  std::vector<MentionRecord> in_kb;
  for (const auto& c : concepts)
    for (std::size_t i = 0; i < cfg.mentions_per_concept; ++i) {
      const auto& src = c.names[uniform_below(rng, c.names.size())];
      in_kb.push_back(make_record(mention_id(), detail::edit(src, edits(), rng), {ConceptId(c.id)}));
    }
  shuffle(in_kb, rng);
  const std::size_t n_train = static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(in_kb.size()) + 0.5);
  const std::size_t n_dev = static_cast<std::size_t>(cfg.dev_fraction * static_cast<double>(in_kb.size()) + 0.5);
  b.train.split = Split::kTrain;
  b.dev.split = Split::kDev;
  b.test.split = Split::kTest;
  for (std::size_t i = 0; i < in_kb.size(); ++i) {
    Corpus& dst = i < n_train ? b.train : (i < n_train + n_dev ? b.dev : b.test);
    dst.records.push_back(std::move(in_kb[i]));
  }

  if (cfg.nil_rate > 0) {
    const auto nil_for = [&](std::size_t n_in_kb) {
      return static_cast<std::size_t>(static_cast<double>(n_in_kb) * cfg.nil_rate / (1.0 - cfg.nil_rate) + 0.5);
    };
    const auto add_nil = [&](Corpus& dst, std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) {
        const std::string src = words.fresh();
        dst.records.push_back(make_record(mention_id(), detail::edit(src, edits(), rng), {}));
      }
      shuffle(dst.records, rng);
    };
    add_nil(b.dev, nil_for(b.dev.size()));
    add_nil(b.test, nil_for(b.test.size()));
  }
  return b;
}

}  // namespace conlink::synthetic
