// Copyright 2026 The tatt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tatt/tatn_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace tatt {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void PutU32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF),
                     static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF),
                     static_cast<char>((v >> 24) & 0xFF)};
  os.write(b, 4);
}

std::uint32_t GetU32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("TATN: truncated header");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteTatn(std::ostream& os, const Tensor& t) {
  if (t.rank() > 255) throw FormatError("TATN: rank exceeds 255");
  os.write(reinterpret_cast<const char*>(kTatnMagic.data()), 4);
  os.put(static_cast<char>(t.rank()));
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("TATN: extent exceeds u32");
    }
    PutU32(os, static_cast<std::uint32_t>(e));
  }
  for (double v : t.data()) {
    PutU32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os) throw FormatError("TATN: write failed");
}

void WriteTatn(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  WriteTatn(os, t);
}

Tensor ReadTatn(std::istream& is) {
  unsigned char magic[4];
  if (!is.read(reinterpret_cast<char*>(magic), 4) ||
      std::memcmp(magic, kTatnMagic.data(), 4) != 0) {
    throw FormatError("TATN: bad magic");
  }
  const int rank = is.get();
  if (rank == std::char_traits<char>::eof() || rank == 0) {
    throw FormatError("TATN: bad rank");
  }
  Shape shape(static_cast<std::size_t>(rank));
  for (auto& e : shape) {
    e = GetU32(is);
    if (e == 0) throw FormatError("TATN: zero extent");
  }
  Tensor t(shape);
  for (auto& v : t.data()) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
      throw FormatError("TATN: truncated payload");
    }
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    v = static_cast<double>(std::bit_cast<float>(bits));
  }
  return t;
}

Tensor ReadTatn(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return ReadTatn(is);
}

Tensor ReadMatrixCsv(std::istream& is) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw FormatError("CSV: bad number '" + cell + "' on row " +
                          std::to_string(rows));
      }
      while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) {
        ++pos;
      }
      if (pos != cell.size()) {
        throw FormatError("CSV: bad number '" + cell + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols || count == 0) {
      throw FormatError("CSV: ragged row " + std::to_string(rows));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("CSV: no data rows");
  return Tensor({rows, cols}, std::move(values));
}

Tensor LoadSquareMatrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  char head[4] = {};
  is.read(head, 4);
  const bool tatn = is.gcount() == 4 &&
                    std::memcmp(head, kTatnMagic.data(), 4) == 0;
  is.clear();
  is.seekg(0);
  Tensor m = tatn ? ReadTatn(is) : ReadMatrixCsv(is);
  if (m.rank() != 2 || m.extent(0) != m.extent(1)) {
    throw FormatError("expected a square matrix, got " +
                      ShapeToString(m.shape()));
  }
  return m;
}

}  // namespace tatt
