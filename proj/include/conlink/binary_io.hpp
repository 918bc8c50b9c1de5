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

// Little-endian primitives for the checkpoint and index files.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "conlink/error.hpp"

namespace conlink::io {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void write_bytes(std::ostream& os, std::string_view s) { os.write(s.data(), static_cast<std::streamsize>(s.size())); }

class Reader {
 public:
  Reader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  std::uint64_t u64() {
    unsigned char buf[8];
    read_raw(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::uint8_t u8() {
    char c;
    read_raw(&c, 1);
    return static_cast<std::uint8_t>(c);
  }

  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    if (n > 0) read_raw(s.data(), n);
    return s;
  }

  void expect_magic(std::string_view magic) {
    if (bytes(magic.size()) != magic) fail("bad magic, expected \"" + std::string(magic) + "\"");
  }

  void expect_eof() {
    if (is_.peek() != std::char_traits<char>::eof()) fail("trailing bytes after payload");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, 0, what); }

 private:
  void read_raw(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
  }

  std::istream& is_;
  std::string source_;
};

// 64-bit FNV-1a, used for artifact fingerprints and n-gram hashing.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace conlink::io
