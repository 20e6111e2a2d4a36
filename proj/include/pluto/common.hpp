#pragma once

#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pluto {

// Times are integer picoseconds and energies integer femtojoules so that
// latency/energy sums are exact and order-independent.
using Ps = std::int64_t;
using Fj = std::int64_t;

inline Ps ns_to_ps(double ns) { return static_cast<Ps>(std::llround(ns * 1e3)); }
inline double ps_to_ns(Ps ps) { return static_cast<double>(ps) / 1e3; }
inline Fj pj_to_fj(double pj) { return static_cast<Fj>(std::llround(pj * 1e3)); }
inline double fj_to_pj(Fj fj) { return static_cast<double>(fj) / 1e3; }

enum class Err {
  ActivateWhileOpen,
  InvalidRow,
  WidthMismatch,
  SweepOutOfRange,
  GSAInvalidLUT,
  LUTNotLoaded,
  OverlappingClasses,
  PartitionTooSmall,
  RowsNotDistinct,
  UnsupportedAmount,
  BufferClosed,
  CapacityExceeded,
  DomainTooLarge,
  NotClassConstant,
  RangeOverflow,
  ParseError,
  Unsupported,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::ActivateWhileOpen: return "ActivateWhileOpen";
    case Err::InvalidRow: return "InvalidRow";
    case Err::WidthMismatch: return "WidthMismatch";
    case Err::SweepOutOfRange: return "SweepOutOfRange";
    case Err::GSAInvalidLUT: return "GSAInvalidLUT";
    case Err::LUTNotLoaded: return "LUTNotLoaded";
    case Err::OverlappingClasses: return "OverlappingClasses";
    case Err::PartitionTooSmall: return "PartitionTooSmall";
    case Err::RowsNotDistinct: return "RowsNotDistinct";
    case Err::UnsupportedAmount: return "UnsupportedAmount";
    case Err::BufferClosed: return "BufferClosed";
    case Err::CapacityExceeded: return "CapacityExceeded";
    case Err::DomainTooLarge: return "DomainTooLarge";
    case Err::NotClassConstant: return "NotClassConstant";
    case Err::RangeOverflow: return "RangeOverflow";
    case Err::ParseError: return "ParseError";
    case Err::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

class SimError : public std::runtime_error {
 public:
  SimError(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

using Row = std::vector<std::uint8_t>;

// ---- lane accessors --------------------------------------------------------
//
// A row is a flat byte array split into lanes of `width_bits`.  Sub-byte lanes
// are packed LSB-first within each byte; multi-byte lanes are little-endian.

inline std::size_t lane_count(std::size_t row_bytes, int width_bits) {
  return row_bytes * 8 / static_cast<std::size_t>(width_bits);
}

inline std::uint64_t get_lane(std::span<const std::uint8_t> row, int width_bits,
                              std::size_t lane) {
  if (width_bits >= 8) {
    const std::size_t nbytes = static_cast<std::size_t>(width_bits) / 8;
    const std::size_t off = lane * nbytes;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < nbytes; ++i)
      v |= static_cast<std::uint64_t>(row[off + i]) << (8 * i);
    return v;
  }
  const std::size_t bit = lane * static_cast<std::size_t>(width_bits);
  const std::uint8_t byte = row[bit / 8];
  const std::uint8_t mask = static_cast<std::uint8_t>((1u << width_bits) - 1u);
  return (byte >> (bit % 8)) & mask;
}

inline void set_lane(std::span<std::uint8_t> row, int width_bits, std::size_t lane,
                     std::uint64_t value) {
  if (width_bits >= 8) {
    const std::size_t nbytes = static_cast<std::size_t>(width_bits) / 8;
    const std::size_t off = lane * nbytes;
    for (std::size_t i = 0; i < nbytes; ++i)
      row[off + i] = static_cast<std::uint8_t>(value >> (8 * i));
    return;
  }
  const std::size_t bit = lane * static_cast<std::size_t>(width_bits);
  const std::uint8_t mask = static_cast<std::uint8_t>((1u << width_bits) - 1u);
  std::uint8_t& byte = row[bit / 8];
  byte = static_cast<std::uint8_t>((byte & ~(mask << (bit % 8))) |
                                   ((value & mask) << (bit % 8)));
}

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline int ilog2(std::uint64_t v) {
  int r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

// Intra-lane logical shift of every lane in a row.  Lane widths are powers of
// two between 1 and 256 bits; shifts wider than the lane clear it.
inline void shift_lanes(Row& row, int lane_width_bits, int amount, bool left) {
  const std::size_t nlanes = lane_count(row.size(), lane_width_bits);
  if (lane_width_bits <= 64) {
    for (std::size_t l = 0; l < nlanes; ++l) {
      std::uint64_t v = get_lane(row, lane_width_bits, l);
      if (amount >= lane_width_bits) {
        v = 0;
      } else if (left) {
        v <<= amount;
        if (lane_width_bits < 64) v &= (std::uint64_t(1) << lane_width_bits) - 1;
      } else {
        v >>= amount;
      }
      set_lane(row, lane_width_bits, l, v);
    }
    return;
  }
  // wide lanes: shift the lane's byte window as a little-endian integer
  const std::size_t lane_bytes = static_cast<std::size_t>(lane_width_bits) / 8;
  Row tmp(lane_bytes);
  for (std::size_t l = 0; l < nlanes; ++l) {
    std::uint8_t* p = row.data() + l * lane_bytes;
    std::fill(tmp.begin(), tmp.end(), 0);
    const int byte_shift = amount / 8;
    const int bit_shift = amount % 8;
    for (std::size_t i = 0; i < lane_bytes; ++i) {
      const long src = left ? static_cast<long>(i) - byte_shift
                            : static_cast<long>(i) + byte_shift;
      if (src < 0 || src >= static_cast<long>(lane_bytes)) continue;
      std::uint16_t v = p[src];
      if (bit_shift) {
        if (left) {
          v = static_cast<std::uint16_t>(v << bit_shift);
          if (src > 0) v |= p[src - 1] >> (8 - bit_shift);
        } else {
          v = static_cast<std::uint16_t>(v >> bit_shift);
          if (src + 1 < static_cast<long>(lane_bytes))
            v |= static_cast<std::uint16_t>(p[src + 1] << (8 - bit_shift));
        }
      }
      tmp[i] = static_cast<std::uint8_t>(v);
    }
    std::copy(tmp.begin(), tmp.end(), p);
  }
}

}  // namespace pluto
