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

// Writes the seeded synthetic benchmark as terminology.tsv plus
// train/dev/test.tsv in the layout the conlink tool reads.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "conlink/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"conlink-synth: write the synthetic benchmark"};
  conlink::synthetic::Config cfg;
  std::string out = ".";
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", cfg.seed, "generator seed");
  app.add_option("--nil-rate", cfg.nil_rate, "share of nil mentions in dev and test")->check(CLI::Range(0.0, 0.9));
  app.add_option("--roots", cfg.roots);
  app.add_option("--mids", cfg.mids_per_root);
  app.add_option("--leaves", cfg.leaves_per_mid);
  app.add_option("--mentions", cfg.mentions_per_concept, "mentions per concept");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto b = conlink::synthetic::generate(cfg);
    fs::create_directories(out);
    const auto write = [&](const char* name, auto&& fn) {
      std::ofstream os(fs::path(out) / name, std::ios::trunc | std::ios::binary);
      if (!os) throw conlink::DataError(std::string("cannot write ") + name);
      fn(os);
    };
    write("terminology.tsv", [&](std::ostream& os) { conlink::write_terminology(os, b.terminology); });
    write("train.tsv", [&](std::ostream& os) { conlink::write_corpus(os, b.train); });
    write("dev.tsv", [&](std::ostream& os) { conlink::write_corpus(os, b.dev); });
    write("test.tsv", [&](std::ostream& os) { conlink::write_corpus(os, b.test); });
    std::cout << b.terminology.concept_count() << " concepts, " << b.terminology.name_count() << " names, "
              << b.train.size() << '/' << b.dev.size() << '/' << b.test.size() << " mentions\n";
  } catch (const std::exception& e) {
    std::cerr << "conlink-synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
