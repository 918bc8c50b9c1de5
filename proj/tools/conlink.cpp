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

// conlink: ingest -> train -> index -> fit-threshold -> link -> eval.
//
// Artifacts live in the --out directory under fixed names, so a pipeline is
// six invocations sharing one --config and one --out. Exit codes: 0 success,
// 1 usage or configuration error, 2 data error, 3 internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "conlink/conlink.hpp"
#include "conlink/json_io.hpp"
#include "conlink/run_config.hpp"

namespace fs = std::filesystem;
using namespace conlink;

namespace {

constexpr const char* kCheckpoint = "encoder.ckpt";
constexpr const char* kIndex = "index.cidx";
constexpr const char* kThreshold = "threshold.json";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  DataPaths data;  // command-line overrides
  std::string encoder, index, threshold;
  bool no_threshold = false;
  bool allow_mismatch = false;
  bool refined = false;
  std::string text, mentions;
};

struct Context {
  RunConfig cfg;
  DataPaths data;  // resolved
  fs::path out;
};

Context make_context(const Options& o) {
  Context c;
  fs::path base = fs::current_path();
  if (!o.config.empty()) {
    c.cfg = load_run_config(o.config);
    base = fs::absolute(o.config).parent_path();
  }
  if (o.seed) c.cfg.set_seed(*o.seed);
  const auto over = [](std::string& dst, const std::string& src) {
    if (!src.empty()) dst = src;
  };
  over(c.cfg.data.terminology, o.data.terminology);
  over(c.cfg.data.train, o.data.train);
  over(c.cfg.data.dev, o.data.dev);
  over(c.cfg.data.test, o.data.test);
  c.data = resolve(c.cfg.data, base);
  // Flag paths are relative to the working directory, not the config file.
  const auto cwd_over = [](std::string& dst, const std::string& src) {
    if (!src.empty()) dst = fs::absolute(src).lexically_normal().string();
  };
  cwd_over(c.data.terminology, o.data.terminology);
  cwd_over(c.data.train, o.data.train);
  cwd_over(c.data.dev, o.data.dev);
  cwd_over(c.data.test, o.data.test);
  if (o.refined) c.cfg.eval.refined = true;
  c.out = o.out;
  fs::create_directories(c.out);
  return c;
}

const std::string& require(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " given (set it in --config or pass --" + what + ")");
  return path;
}

std::string artifact(const Context& c, const std::string& flag, const char* name) {
  return flag.empty() ? (c.out / name).string() : flag;
}

FingerprintPolicy policy(const Options& o) { return o.allow_mismatch ? FingerprintPolicy::kWarn : FingerprintPolicy::kFail; }

std::optional<NilThreshold> maybe_threshold(const Context& c, const Options& o) {
  if (o.no_threshold) return std::nullopt;
  if (!o.threshold.empty()) return load_threshold(o.threshold);
  const fs::path p = c.out / kThreshold;
  if (fs::exists(p)) return load_threshold(p.string());
  return std::nullopt;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ---- ingest

struct CorpusStats {
  std::string split;
  std::size_t records = 0, unique = 0, nil = 0, composite = 0, uncovered = 0, refined = 0;
};

CorpusStats corpus_stats(const Corpus& c, const Terminology& t, const Corpus* train) {
  CorpusStats s;
  s.split = split_name(c.split);
  s.records = c.size();
  std::set<std::string> seen;
  for (const auto& r : c.records) {
    seen.insert(r.normalized_text);
    s.nil += r.is_nil();
    s.composite += r.is_composite();
    s.uncovered += !r.is_nil() && !gold_covered(r, t);
  }
  s.unique = seen.size();
  s.refined = refine(c, train).size();
  return s;
}

int cmd_ingest(const Options& o) {
  const Context c = make_context(o);
  const Terminology t = load_terminology(require(c.data.terminology, "terminology"));
  std::size_t with_parents = 0;
  for (const auto& cui : t.concepts()) with_parents += !t.direct_parents(cui).empty();
  std::printf("terminology  %zu concepts, %zu names, %zu with parents\n", t.concept_count(), t.name_count(),
              with_parents);

  std::optional<Corpus> train;
  if (!c.data.train.empty()) train = load_corpus(c.data.train, Split::kTrain);
  std::vector<CorpusStats> rows;
  if (train) rows.push_back(corpus_stats(*train, t, nullptr));
  for (auto [path, split] : {std::pair{c.data.dev, Split::kDev}, std::pair{c.data.test, Split::kTest}})
    if (!path.empty()) rows.push_back(corpus_stats(load_corpus(path, split), t, train ? &*train : nullptr));

  std::printf("%-6s %8s %8s %6s %10s %10s %8s\n", "split", "records", "unique", "nil", "composite", "uncovered",
              "refined");
  nlohmann::json js = nlohmann::json::array();
  for (const auto& s : rows) {
    std::printf("%-6s %8zu %8zu %6zu %10zu %10zu %8zu\n", s.split.c_str(), s.records, s.unique, s.nil, s.composite,
                s.uncovered, s.refined);
    js.push_back({{"split", s.split},         {"records", s.records},     {"unique", s.unique}, {"nil", s.nil},
                  {"composite", s.composite}, {"uncovered", s.uncovered}, {"refined", s.refined}});
  }
  write_json_file((c.out / "ingest_stats.json").string(),
                  {{"terminology", {{"concepts", t.concept_count()}, {"names", t.name_count()}, {"with_parents", with_parents}}},
                   {"corpora", js},
                   {"config", to_json(c.cfg)}});
  return 0;
}

// ---- train

int cmd_train(const Options& o) {
  const Context c = make_context(o);
  const Terminology t = load_terminology(require(c.data.terminology, "terminology"));
  const Corpus train_corpus = load_corpus(require(c.data.train, "train"), Split::kTrain);
  std::optional<Corpus> dev;
  if (!c.data.dev.empty()) dev = load_corpus(c.data.dev, Split::kDev);

  const TrainResult r = train(t, train_corpus, c.cfg.train, dev ? &*dev : nullptr);
  for (std::size_t e = 0; e < r.report.epochs.size(); ++e) {
    const auto& s = r.report.epochs[e];
    std::fprintf(stderr, "epoch %2zu  loss %.6f  active %.4f  triplets %zu%s  %.2fs\n", e + 1, s.mean_loss,
                 s.active_fraction, s.triplets, s.dev_acc1 ? ("  dev_acc1 " + fmt("%.4f", *s.dev_acc1)).c_str() : "",
                 s.wall_seconds);
  }
  r.encoder.save_file((c.out / kCheckpoint).string());
  nlohmann::json rep = to_json(r.report);
  rep["config"] = to_json(c.cfg);
  write_json_file((c.out / "train_report.json").string(), rep);
  std::printf("trained on %zu records (%zu skipped); wrote %s\n", r.report.usable_records, r.report.skipped_records,
              (c.out / kCheckpoint).string().c_str());
  return 0;
}

// ---- index

int cmd_index(const Options& o) {
  const Context c = make_context(o);
  const Terminology t = load_terminology(require(c.data.terminology, "terminology"));
  const NGramEncoder enc = NGramEncoder::load_file(artifact(c, o.encoder, kCheckpoint));
  const VectorIndex ix = build_index(t, enc, c.cfg.distance(), c.cfg.threads);
  const std::string path = artifact(c, o.index, kIndex);
  ix.save_file(path);
  std::printf("indexed %zu names (D=%zu, %s) into %s\n", ix.size(), ix.dimension(), distance_name(ix.kind()),
              path.c_str());
  return 0;
}

// ---- fit-threshold

int cmd_fit_threshold(const Options& o) {
  const Context c = make_context(o);
  const NGramEncoder enc = NGramEncoder::load_file(artifact(c, o.encoder, kCheckpoint));
  const VectorIndex ix = VectorIndex::load_file(artifact(c, o.index, kIndex));
  const Corpus dev = load_corpus(require(c.data.dev, "dev"), Split::kDev);
  const NilThreshold th = fit_threshold(ix, enc, dev, c.cfg.threshold, c.cfg.weighting, policy(o));
  nlohmann::json j = to_json(th);
  j["config"] = to_json(c.cfg);
  const std::string path = artifact(c, o.threshold, kThreshold);
  write_json_file(path, j);
  std::printf("%s threshold %.6f (n_tp %zu, n_fp %zu) written to %s\n", threshold_strategy_name(th.strategy), th.value,
              th.n_tp, th.n_fp, path.c_str());
  return 0;
}

// ---- link

void print_ranking(std::ostream& os, const std::string& id, std::size_t part, const ComponentPrediction& p) {
  if (!p) {
    os << id << '\t' << part << "\t0\tnil\t\n";
    return;
  }
  for (std::size_t r = 0; r < p->ranked.size(); ++r)
    os << id << '\t' << part << '\t' << r + 1 << '\t' << p->ranked[r].cui.str() << '\t'
       << fmt("%.6f", p->ranked[r].distance) << '\n';
}

int cmd_link(const Options& o) {
  if (o.text.empty() == o.mentions.empty()) throw ConfigError("link needs exactly one of --text or --mentions");
  const Context c = make_context(o);
  const NGramEncoder enc = NGramEncoder::load_file(artifact(c, o.encoder, kCheckpoint));
  const VectorIndex ix = VectorIndex::load_file(artifact(c, o.index, kIndex));
  const auto th = maybe_threshold(c, o);
  const Linker linker(ix, enc, policy(o));

  std::vector<MentionRecord> recs;
  if (!o.text.empty()) {
    recs.push_back(make_record("text", o.text, {}));
  } else {
    std::ifstream in(o.mentions, std::ios::binary);
    if (!in) throw NotFoundError("cannot open mentions file " + o.mentions);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = detail::chomp(line);
      if (row.empty() || row.front() == '#') continue;
      const auto cols = detail::split_char(row, '\t');
      if (cols.size() < 2 || cols.size() > 3)
        throw ParseError(o.mentions, lineno, "expected id<TAB>text with an optional gold column");
      try {
        recs.push_back(make_record(trim(cols[0]), std::string(cols[1]), {}));
      } catch (const ValidationError& e) {
        throw ParseError(o.mentions, lineno, e.what());
      }
    }
  }
  auto preds = linker.link_records(recs, c.cfg.link_k);
  if (th)
    for (auto& p : preds) p = apply_gate(p, *th);

  if (!o.text.empty()) {
    for (std::size_t part = 0; part < preds[0].size(); ++part) {
      std::printf("%s\n", recs[0].components[part].c_str());
      const auto& p = preds[0][part];
      if (!p) {
        std::printf("  nil\n");
        continue;
      }
      for (std::size_t r = 0; r < p->ranked.size(); ++r)
        std::printf("  %2zu  %-16s %.6f\n", r + 1, p->ranked[r].cui.str().c_str(), p->ranked[r].distance);
    }
    return 0;
  }
  const fs::path path = c.out / "links.tsv";
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << "source_id\tpart\trank\tcui\tdistance\n";
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t part = 0; part < preds[i].size(); ++part) print_ranking(os, recs[i].source_id, part, preds[i][part]);
  std::printf("linked %zu mentions; wrote %s\n", recs.size(), path.string().c_str());
  return 0;
}

// ---- eval

int cmd_eval(const Options& o) {
  const Context c = make_context(o);
  const Terminology t = load_terminology(require(c.data.terminology, "terminology"));
  const NGramEncoder enc = NGramEncoder::load_file(artifact(c, o.encoder, kCheckpoint));
  const VectorIndex ix = VectorIndex::load_file(artifact(c, o.index, kIndex));
  const Corpus test = load_corpus(require(c.data.test, "test"), Split::kTest);
  std::optional<Corpus> train_corpus;
  if (c.cfg.eval.refined && !c.data.train.empty()) train_corpus = load_corpus(c.data.train, Split::kTrain);
  const auto th = maybe_threshold(c, o);

  const EvalReport rep = evaluate_pipeline(t, enc, ix, th ? &*th : nullptr, test, c.cfg.eval,
                                           train_corpus ? &*train_corpus : nullptr, policy(o));
  print_report(std::cout, rep);
  nlohmann::json j = to_json(rep);
  j["refined"] = c.cfg.eval.refined;
  j["threshold"] = th ? to_json(*th) : nlohmann::json(nullptr);
  j["config"] = to_json(c.cfg);
  write_json_file((c.out / "eval_report.json").string(), j);
  std::ofstream adj(c.out / "adjudications.tsv", std::ios::trunc);
  if (!adj) throw DataError("cannot write adjudications");
  write_adjudications(adj, rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conlink: metric-learning concept linking"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "run config (JSON)")->check(CLI::ExistingFile);
    s->add_option("--seed", o.seed, "override the run seed");
    s->add_option("--out", o.out, "artifact directory");
    s->add_option("--terminology", o.data.terminology, "terminology TSV");
  };
  const auto models = [&](CLI::App* s) {
    s->add_option("--encoder", o.encoder, "encoder checkpoint (default <out>/encoder.ckpt)");
    s->add_option("--index", o.index, "index file (default <out>/index.cidx)");
    s->add_flag("--allow-mismatch", o.allow_mismatch, "warn instead of failing on an encoder/index fingerprint mismatch");
  };
  const auto gate = [&](CLI::App* s) {
    s->add_option("--threshold", o.threshold, "nil threshold (default <out>/threshold.json when present)");
    s->add_flag("--no-threshold", o.no_threshold, "skip the nil gate");
  };

  auto* ingest = app.add_subcommand("ingest", "validate inputs and print corpus statistics");
  common(ingest);
  ingest->add_option("--train", o.data.train, "train split TSV");
  ingest->add_option("--dev", o.data.dev, "dev split TSV");
  ingest->add_option("--test", o.data.test, "test split TSV");

  auto* train_cmd = app.add_subcommand("train", "train the encoder");
  common(train_cmd);
  train_cmd->add_option("--train", o.data.train, "train split TSV");
  train_cmd->add_option("--dev", o.data.dev, "dev split TSV");

  auto* index = app.add_subcommand("index", "embed every terminology name");
  common(index);
  index->add_option("--encoder", o.encoder, "encoder checkpoint (default <out>/encoder.ckpt)");
  index->add_option("--index", o.index, "output index (default <out>/index.cidx)");

  auto* fit = app.add_subcommand("fit-threshold", "fit the nil distance threshold on dev");
  common(fit);
  models(fit);
  fit->add_option("--dev", o.data.dev, "dev split TSV");
  fit->add_option("--threshold", o.threshold, "output threshold (default <out>/threshold.json)");

  auto* link_cmd = app.add_subcommand("link", "rank concepts for mentions");
  common(link_cmd);
  models(link_cmd);
  gate(link_cmd);
  link_cmd->add_option("--text", o.text, "a single mention");
  link_cmd->add_option("--mentions", o.mentions, "TSV of id<TAB>text");

  auto* eval_cmd = app.add_subcommand("eval", "score the test split");
  common(eval_cmd);
  models(eval_cmd);
  gate(eval_cmd);
  eval_cmd->add_option("--test", o.data.test, "test split TSV");
  eval_cmd->add_option("--train", o.data.train, "train split, for --refined");
  eval_cmd->add_flag("--refined", o.refined, "drop duplicates and train overlap first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*train_cmd) return cmd_train(o);
    if (*index) return cmd_index(o);
    if (*fit) return cmd_fit_threshold(o);
    if (*link_cmd) return cmd_link(o);
    if (*eval_cmd) return cmd_eval(o);
  } catch (const ConfigError& e) {
    std::cerr << "conlink: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "conlink: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "conlink: internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
