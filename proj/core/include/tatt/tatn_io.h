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

#ifndef TATT_TATN_IO_H_
#define TATT_TATN_IO_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tatt/tensor.h"

namespace tatt {

// TATN binary tensor file:
//   4 bytes   magic "TATN" (54 41 54 4E)
//   u8        rank
//   rank*u32  extents, little-endian
//   f32[]     row-major payload, little-endian
inline constexpr std::array<std::uint8_t, 4> kTatnMagic = {0x54, 0x41, 0x54,
                                                          0x4E};

// Values are narrowed to f32 on write.
void WriteTatn(std::ostream& os, const Tensor& t);
void WriteTatn(const std::filesystem::path& path, const Tensor& t);

Tensor ReadTatn(std::istream& is);
Tensor ReadTatn(const std::filesystem::path& path);

// Numeric CSV, one matrix row per line. Blank lines and lines starting
// with '#' are skipped. Rows must have equal length.
Tensor ReadMatrixCsv(std::istream& is);

// Sniffs the magic bytes; falls back to CSV. Throws FormatError unless the
// result is a square matrix.
Tensor LoadSquareMatrix(const std::filesystem::path& path);

}  // namespace tatt

#endif  // TATT_TATN_IO_H_
