#pragma once

#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pluto/common.hpp"

namespace pluto {

// A lookup table ready to be placed into subarray rows.  `width` is the lane
// width in bits used both for the comparand and the stored entries.  Row i
// answers for comparand key `keys[i]` (explicit form) or `i * stride`
// (arithmetic form); `mask` selects the comparand bits that take part in the
// match.  A full table has stride 1 and mask == 2^width - 1.
struct LutProgram {
  int width = 8;
  std::uint64_t mask = 0xFF;
  std::uint64_t stride = 1;
  std::vector<std::uint64_t> keys;  // empty: key(i) = i * stride
  std::vector<std::uint64_t> entries;

  std::uint64_t width_mask() const {
    return width >= 64 ? ~0ull : (std::uint64_t(1) << width) - 1;
  }
  std::uint64_t key(std::size_t i) const {
    return keys.empty() ? i * stride : keys[i];
  }
};

inline LutProgram build_lut(int width, std::size_t n,
                            const std::function<std::uint64_t(std::uint64_t)>& fn) {
  if (width < 1 || width > 64 || !is_pow2(static_cast<std::uint64_t>(width)))
    throw SimError(Err::WidthMismatch, "lane width must be a power of two in [1,64]");
  if (n > (std::uint64_t(1) << std::min(width, 63)))
    throw SimError(Err::DomainTooLarge, "more entries than the lane width can key");
  LutProgram p;
  p.width = width;
  p.mask = p.width_mask();
  p.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t v = fn(i);
    if (v & ~p.width_mask())
      throw SimError(Err::RangeOverflow, "entry " + std::to_string(i) +
                                             " does not fit the lane width");
    p.entries[i] = v;
  }
  return p;
}

// Table for `a op b` where the comparand lane carries a in its high half and
// b in its low half.
inline LutProgram build_binary_op_lut(
    int width, const std::function<std::uint64_t(std::uint64_t, std::uint64_t)>& op) {
  const int half = width / 2;
  return build_lut(width, std::size_t(1) << width, [&](std::uint64_t k) {
    return op(k >> half, k & ((std::uint64_t(1) << half) - 1));
  });
}

// Collapses a full table onto its masked equivalence classes.  Every entry in
// a class must agree.  Classes are emitted in increasing key order; when the
// class keys form the arithmetic sequence 0, s, 2s, ... the result uses the
// stride form, otherwise explicit keys.
inline LutProgram compress_with_mask(const LutProgram& full, std::uint64_t mask) {
  if (!full.keys.empty() || full.stride != 1)
    throw SimError(Err::Unsupported, "can only compress a full table");
  LutProgram p;
  p.width = full.width;
  p.mask = mask & full.width_mask();
  std::vector<std::uint64_t> keys, vals;
  for (std::uint64_t k = 0; k < full.entries.size(); ++k) {
    const std::uint64_t cls = k & p.mask;
    if (cls == k) {
      keys.push_back(cls);
      vals.push_back(full.entries[k]);
    } else {
      std::size_t idx = 0;
      while (idx < keys.size() && keys[idx] != cls) ++idx;
      if (idx == keys.size() || vals[idx] != full.entries[k])
        throw SimError(Err::NotClassConstant,
                       "entries differ inside masked class " + std::to_string(cls));
    }
  }
  p.entries = std::move(vals);
  bool arithmetic = keys.size() >= 1 && keys[0] == 0;
  if (arithmetic && keys.size() > 1) {
    const std::uint64_t s = keys[1];
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i] != i * s) { arithmetic = false; break; }
    if (arithmetic) p.stride = s;
  }
  if (!arithmetic || keys.size() <= 1) {
    if (keys.size() == 1 && keys[0] == 0) {
      p.stride = 1;
    } else if (!arithmetic) {
      p.keys = std::move(keys);
    }
  }
  return p;
}

// Splits a table bigger than one subarray: R low key bits address a row and S
// high bits pick one of 2^S subarrays.  Returns {S, R}.
inline std::pair<int, int> partition_large(std::size_t n_entries, long rows_per_subarray) {
  if (rows_per_subarray < 2 || !is_pow2(static_cast<std::uint64_t>(rows_per_subarray)))
    throw SimError(Err::PartitionTooSmall, "rows per subarray must be a power of two >= 2");
  const int R = ilog2(static_cast<std::uint64_t>(rows_per_subarray));
  std::size_t chunks = (n_entries + rows_per_subarray - 1) / rows_per_subarray;
  int S = 0;
  while ((std::size_t(1) << S) < chunks) ++S;
  return {S, R};
}

// Slice of a large table served by chunk k (keys [k*2^R, (k+1)*2^R)).
inline LutProgram lut_chunk(const LutProgram& full, int R, int k) {
  if (!full.keys.empty() || full.stride != 1)
    throw SimError(Err::Unsupported, "can only partition a full table");
  const std::size_t lo = static_cast<std::size_t>(k) << R;
  const std::size_t hi =
      std::min(full.entries.size(), lo + (std::size_t(1) << R));
  if (lo >= full.entries.size())
    throw SimError(Err::PartitionTooSmall, "chunk index beyond table");
  LutProgram p;
  p.width = full.width;
  p.mask = full.mask;
  p.entries.assign(full.entries.begin() + lo, full.entries.begin() + hi);
  return p;
}

// ---- binary container ------------------------------------------------------
//
// Layout (little-endian): "PLUT", u32 version, u32 width, u64 mask,
// u64 stride, u64 n_keys, keys..., u64 n_entries, entries...

inline void save_lut(std::ostream& os, const LutProgram& p) {
  os.write("PLUT", 4);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  u32(1);
  u32(static_cast<std::uint32_t>(p.width));
  u64(p.mask);
  u64(p.stride);
  u64(p.keys.size());
  for (auto k : p.keys) u64(k);
  u64(p.entries.size());
  for (auto e : p.entries) u64(e);
}

inline LutProgram load_lut_file(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "PLUT", 4) != 0)
    throw SimError(Err::ParseError, "not a LUT container (bad magic)");
  auto u32 = [&]() {
    std::uint32_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
      throw SimError(Err::ParseError, "truncated LUT container");
    return v;
  };
  auto u64 = [&]() {
    std::uint64_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 8))
      throw SimError(Err::ParseError, "truncated LUT container");
    return v;
  };
  if (u32() != 1) throw SimError(Err::ParseError, "unsupported LUT container version");
  LutProgram p;
  p.width = static_cast<int>(u32());
  p.mask = u64();
  p.stride = u64();
  p.keys.resize(u64());
  for (auto& k : p.keys) k = u64();
  p.entries.resize(u64());
  for (auto& e : p.entries) e = u64();
  return p;
}

inline void save_lut_path(const std::string& path, const LutProgram& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SimError(Err::ParseError, "cannot open " + path + " for writing");
  save_lut(os, p);
}

inline LutProgram load_lut_path(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SimError(Err::ParseError, "cannot open LUT file " + path);
  return load_lut_file(is);
}

inline void inspect_lut(std::ostream& os, const LutProgram& p) {
  os << "width_bits " << p.width << "\n";
  os << "mask 0x" << std::hex << p.mask << std::dec << "\n";
  os << "stride 0x" << std::hex << p.stride << std::dec << "\n";
  os << "entries " << p.entries.size() << "\n";
  for (std::size_t i = 0; i < p.entries.size(); ++i)
    os << std::hex << "0x" << p.key(i) << " -> 0x" << p.entries[i] << std::dec
       << "\n";
}

}  // namespace pluto
