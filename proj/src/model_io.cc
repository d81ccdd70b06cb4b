// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

// Binary model container:
//   "TDSM" | u32 version | u32 spec_len | spec text | u32 tensor_count |
//   per tensor: u32 name_len | name | u32 ndim | u32 dims[ndim] | f32 data[]
// All integers and floats little-endian; tensors row-major.

#include <bit>
#include <cstring>
#include <fstream>

#include "tdsasr/model.h"

namespace tdsasr {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxNameLen = 1 << 12;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("model file truncated");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
  } else {
    for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
}

void get_floats(std::istream& in, std::vector<float>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(float)))) {
      throw FormatError("model file truncated in tensor data");
    }
  } else {
    for (float& f : v) f = std::bit_cast<float>(get_u32(in));
  }
}

std::string get_string(std::istream& in, std::uint32_t len) {
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw FormatError("model file truncated");
  return s;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  const std::string spec = model.spec().to_text();
  put_u32(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  const auto tensors = model.tensors();
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    put_floats(out, t.data);
  }
  if (!out) throw FormatError("failed writing model file " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + " is not a TDSM model file");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw FormatError("unsupported model file version " + std::to_string(version));
  }
  const std::uint32_t spec_len = get_u32(in);
  if (spec_len > (1u << 24)) throw FormatError("model spec block too large");
  ModelSpec spec = ModelSpec::parse(get_string(in, spec_len));

  const std::uint32_t count = get_u32(in);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint32_t name_len = get_u32(in);
    if (name_len > kMaxNameLen) throw FormatError("tensor name too long");
    t.name = get_string(in, name_len);
    const std::uint32_t ndim = get_u32(in);
    if (ndim > 8) throw FormatError("tensor rank too large");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = get_u32(in);
      t.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    if (n > (std::size_t{1} << 32)) throw FormatError("tensor too large");
    t.data.resize(n);
    get_floats(in, t.data);
    tensors.push_back(std::move(t));
  }
  return Model::from_tensors(std::move(spec), std::move(tensors));
}

}  // namespace tdsasr
