#pragma once

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pluto/engine.hpp"

namespace pluto {

struct WorkloadSpec {
  std::string name = "bitcount";
  std::size_t input_bytes = 65536;
  std::uint64_t seed = 1;
  int packet_bytes = 128;      // crc*; 512 for vmpc keystream length
  int q_bits = 7;              // vec_mul_q: 7 (8-bit) or 15 (16-bit)
  int threshold = 128;         // binarize cut point (static 50%)
  std::string input_file;      // optional raw input instead of PRNG
};

struct WorkloadResult {
  std::vector<std::uint8_t> output;
  RunMetrics metrics;  // compute phase; table/input staging excluded
};

inline const std::vector<std::string>& workload_names() {
  static const std::vector<std::string> names = {
      "vec_add_lut",  "vec_mul_q",     "bitwise_and", "bitwise_or",
      "bitwise_xor",  "bitwise_xnor",  "bitwise_not", "bitcount",
      "bitcount_short", "crc8",        "crc16",       "crc32",
      "salsa20",      "vmpc",          "binarize",    "color_grade",
      "bnn_layer"};
  return names;
}

inline std::vector<std::uint8_t> make_input(const WorkloadSpec& spec) {
  std::vector<std::uint8_t> v(spec.input_bytes);
  std::mt19937_64 rng(spec.seed);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

// ---------------------------------------------------------------------------
// shared driver plumbing

namespace wldetail {

struct Part {
  long first = 0;
  long count = 0;
};

inline std::vector<Part> split_rows(long n, int p) {
  std::vector<Part> parts(p);
  const long base = n / p, rem = n % p;
  long at = 0;
  for (int g = 0; g < p; ++g) {
    parts[g].first = at;
    parts[g].count = base + (g < rem ? 1 : 0);
    at += parts[g].count;
  }
  return parts;
}

inline Row splat(std::size_t row_bytes, int width, std::uint64_t v) {
  Row r(row_bytes, 0);
  const std::size_t n = lane_count(row_bytes, width);
  for (std::size_t l = 0; l < n; ++l) set_lane(r, width, l, v);
  return r;
}

inline Row row_slice(const std::vector<std::uint8_t>& bytes, std::size_t off,
                     std::size_t row_bytes) {
  Row r(row_bytes, 0);
  const std::size_t take = off < bytes.size()
                               ? std::min(row_bytes, bytes.size() - off)
                               : 0;
  if (take) std::memcpy(r.data(), bytes.data() + off, take);
  return r;
}

// After the parallel region, fold the groups' result buffers toward group 0.
inline void aggregate(Machine& m, const std::vector<Part>& parts) {
  for (std::size_t g = 1; g < parts.size(); ++g)
    if (parts[g].count > 0) lisa_rbm(m.sim(), m.data_sub(g), m.data_sub(0));
}

// One independent program per input row: input rows at [0, count), outputs at
// [count, 2*count) of each group's data subarray.
template <class Setup, class PerRow>
inline RunMetrics run_rowwise(Machine& m, long n_rows, Setup&& setup,
                              PerRow&& per_row) {
  const auto parts = split_rows(n_rows, m.groups());
  for (int g = 0; g < m.groups(); ++g) setup(g, parts[g]);
  const auto before = m.sim().metrics_snapshot();
  run_parallel(m.sim(), m.groups(), [&](int g) {
    for (long i = 0; i < parts[g].count; ++i) per_row(g, parts[g], i);
  });
  aggregate(m, parts);
  return Simulator::delta(before, m.sim().metrics_snapshot());
}

}  // namespace wldetail

// ---------------------------------------------------------------------------
// table builders shared by workloads and their tests

inline LutProgram lut_nibble_add() {
  return build_lut(8, 256, [](std::uint64_t k) { return (k >> 4) + (k & 0xF); });
}
inline LutProgram lut_popcount8() {
  return build_lut(8, 256, [](std::uint64_t k) {
    return static_cast<std::uint64_t>(__builtin_popcountll(k));
  });
}
inline LutProgram lut_popcount4() {
  auto p = build_lut(8, 16, [](std::uint64_t k) {
    return static_cast<std::uint64_t>(__builtin_popcountll(k));
  });
  p.mask = 0x0F;
  return p;
}
inline LutProgram lut_color_curve() {
  return build_lut(8, 256, [](std::uint64_t k) { return (k * k + 127) / 255; });
}
inline LutProgram lut_threshold_full(int cut) {
  return build_lut(8, 256,
                   [&](std::uint64_t k) { return k >= static_cast<std::uint64_t>(cut)
                                                     ? 0xFFull : 0ull; });
}
inline LutProgram lut_bitwise(const std::string& op) {
  return build_lut(2, 4, [&](std::uint64_t k) -> std::uint64_t {
    const std::uint64_t a = k & 1, b = k >> 1;
    if (op == "and") return a & b;
    if (op == "or") return a | b;
    if (op == "xor") return a ^ b;
    if (op == "xnor") return (~(a ^ b)) & 1;
    throw SimError(Err::Unsupported, "bitwise op " + op);
  });
}
inline LutProgram lut_not1() {
  return build_lut(1, 2, [](std::uint64_t k) { return (~k) & 1; });
}
inline LutProgram lut_xnor2() {
  return build_lut(2, 4,
                   [](std::uint64_t k) { return ((k & 1) == (k >> 1)) ? 1ull : 0ull; });
}

// Nibble-product values v = hi(i) * lo(i); queried with per-position masks.
inline LutProgram lut_nibble_product(int width) {
  auto p = build_lut(width, 256,
                     [](std::uint64_t k) { return (k >> 4) * (k & 0xF); });
  return p;  // mask/keys overridden per query position
}

inline LutProgram lut_sign_mask(int width, std::uint64_t sign_bit) {
  LutProgram p;
  p.width = width;
  p.mask = sign_bit;
  p.stride = sign_bit;
  p.entries = {0, width >= 64 ? ~0ull : (std::uint64_t(1) << width) - 1};
  return p;
}

inline LutProgram lut_increment8() {
  return build_lut(8, 256, [](std::uint64_t k) { return (k + 1) & 0xFF; });
}

inline std::uint8_t crc8_step(std::uint8_t crc, std::uint8_t b) {
  crc ^= b;
  for (int i = 0; i < 8; ++i)
    crc = static_cast<std::uint8_t>((crc & 0x80) ? (crc << 1) ^ 0x07 : crc << 1);
  return crc;
}
inline std::uint16_t crc16_step(std::uint16_t crc, std::uint8_t b) {
  crc ^= static_cast<std::uint16_t>(b) << 8;
  for (int i = 0; i < 8; ++i)
    crc = static_cast<std::uint16_t>((crc & 0x8000) ? (crc << 1) ^ 0x1021
                                                    : crc << 1);
  return crc;
}
inline std::uint32_t crc32_step(std::uint32_t crc, std::uint8_t b) {
  crc ^= b;
  for (int i = 0; i < 8; ++i)
    crc = (crc & 1) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
  return crc;
}

inline LutProgram lut_crc8() {
  return build_lut(8, 256,
                   [](std::uint64_t k) { return crc8_step(0, static_cast<std::uint8_t>(k)); });
}
inline LutProgram lut_crc16() {
  auto p = build_lut(16, 256, [](std::uint64_t k) {
    // table entry for the top byte u: remainder of u<<8
    std::uint16_t crc = static_cast<std::uint16_t>(k) << 8;
    for (int i = 0; i < 8; ++i)
      crc = static_cast<std::uint16_t>((crc & 0x8000) ? (crc << 1) ^ 0x1021
                                                      : crc << 1);
    return static_cast<std::uint64_t>(crc);
  });
  p.mask = 0xFF;
  return p;
}
inline LutProgram lut_crc32() {
  auto p = build_lut(32, 256, [](std::uint64_t k) {
    std::uint32_t crc = static_cast<std::uint32_t>(k);
    for (int i = 0; i < 8; ++i)
      crc = (crc & 1) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
    return static_cast<std::uint64_t>(crc);
  });
  p.mask = 0xFF;
  return p;
}

// ---------------------------------------------------------------------------
// oracles

namespace wloracle {

inline std::vector<std::uint8_t> map_bytes(
    const std::vector<std::uint8_t>& in,
    const std::function<std::uint8_t(std::uint8_t)>& f) {
  std::vector<std::uint8_t> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return out;
}

inline std::vector<std::uint8_t> bitwise(const std::vector<std::uint8_t>& in,
                                         const std::string& op) {
  const std::size_t h = in.size() / 2;
  std::vector<std::uint8_t> out(h);
  for (std::size_t i = 0; i < h; ++i) {
    const std::uint8_t a = in[i], b = in[h + i];
    if (op == "and") out[i] = a & b;
    else if (op == "or") out[i] = a | b;
    else if (op == "xor") out[i] = a ^ b;
    else out[i] = static_cast<std::uint8_t>(~(a ^ b));
  }
  return out;
}

inline std::vector<std::uint8_t> vec_mul_q7(const std::vector<std::uint8_t>& in) {
  const std::size_t pairs = in.size() / 2;
  std::vector<std::uint8_t> out(pairs);
  for (std::size_t j = 0; j < pairs; ++j) {
    const auto a = static_cast<std::int8_t>(in[2 * j]);
    const auto b = static_cast<std::int8_t>(in[2 * j + 1]);
    const auto p = static_cast<std::int16_t>(static_cast<int>(a) * static_cast<int>(b));
    out[j] = static_cast<std::uint8_t>((p >> 7) & 0xFF);
  }
  return out;
}

inline std::vector<std::uint8_t> vec_mul_q15(const std::vector<std::uint8_t>& in) {
  const std::size_t pairs = in.size() / 4;
  std::vector<std::uint8_t> out(2 * pairs);
  for (std::size_t j = 0; j < pairs; ++j) {
    const auto a = static_cast<std::int16_t>(in[4 * j] | (in[4 * j + 1] << 8));
    const auto b = static_cast<std::int16_t>(in[4 * j + 2] | (in[4 * j + 3] << 8));
    const auto p = static_cast<std::int32_t>(a) * static_cast<std::int32_t>(b);
    const auto r = static_cast<std::uint16_t>((p >> 15) & 0xFFFF);
    out[2 * j] = static_cast<std::uint8_t>(r);
    out[2 * j + 1] = static_cast<std::uint8_t>(r >> 8);
  }
  return out;
}

inline std::vector<std::uint8_t> crc(const std::vector<std::uint8_t>& in,
                                     int bits, int packet_bytes) {
  const std::size_t n_packets = in.size() / packet_bytes;
  std::vector<std::uint8_t> out;
  for (std::size_t p = 0; p < n_packets; ++p) {
    const std::uint8_t* d = in.data() + p * packet_bytes;
    if (bits == 8) {
      std::uint8_t c = 0;
      for (int j = 0; j < packet_bytes; ++j) c = crc8_step(c, d[j]);
      out.push_back(c);
    } else if (bits == 16) {
      std::uint16_t c = 0xFFFF;
      for (int j = 0; j < packet_bytes; ++j) c = crc16_step(c, d[j]);
      out.push_back(static_cast<std::uint8_t>(c));
      out.push_back(static_cast<std::uint8_t>(c >> 8));
    } else {
      std::uint32_t c = 0xFFFFFFFFu;
      for (int j = 0; j < packet_bytes; ++j) c = crc32_step(c, d[j]);
      c = ~c;
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(c >> (8 * k)));
    }
  }
  return out;
}

inline std::uint32_t rotl32(std::uint32_t v, int n) {
  return (v << n) | (v >> (32 - n));
}

// Reference stream core: 20 rounds over the 4x4 word state, then feed-forward.
inline void salsa20_block(const std::uint32_t in[16], std::uint8_t out[64]) {
  std::uint32_t x[16];
  std::copy(in, in + 16, x);
  auto qr = [&](int a, int b, int c, int d) {
    x[b] ^= rotl32(x[a] + x[d], 7);
    x[c] ^= rotl32(x[b] + x[a], 9);
    x[d] ^= rotl32(x[c] + x[b], 13);
    x[a] ^= rotl32(x[d] + x[c], 18);
  };
  for (int r = 0; r < 10; ++r) {
    qr(0, 4, 8, 12); qr(5, 9, 13, 1); qr(10, 14, 2, 6); qr(15, 3, 7, 11);
    qr(0, 1, 2, 3); qr(5, 6, 7, 4); qr(10, 11, 8, 9); qr(15, 12, 13, 14);
  }
  for (int i = 0; i < 16; ++i) {
    const std::uint32_t v = x[i] + in[i];
    for (int k = 0; k < 4; ++k) out[4 * i + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }
}

// 48 input bytes per block: 32 key + 8 nonce + 8 counter.
inline void salsa20_state_from(const std::uint8_t* blk, std::uint32_t st[16]) {
  auto w = [&](const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  };
  st[0] = 0x61707865u;
  st[5] = 0x3320646eu;
  st[10] = 0x79622d32u;
  st[15] = 0x6b206574u;
  for (int i = 0; i < 4; ++i) st[1 + i] = w(blk + 4 * i);
  st[6] = w(blk + 32);
  st[7] = w(blk + 36);
  st[8] = w(blk + 40);
  st[9] = w(blk + 44);
  for (int i = 0; i < 4; ++i) st[11 + i] = w(blk + 16 + 4 * i);
}

inline std::vector<std::uint8_t> salsa20(const std::vector<std::uint8_t>& in) {
  const std::size_t blocks = in.size() / 48;
  std::vector<std::uint8_t> out(blocks * 64);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::uint32_t st[16];
    salsa20_state_from(in.data() + 48 * b, st);
    salsa20_block(st, out.data() + 64 * b);
  }
  return out;
}

// Key-scheduling and stream generation per the VMPC cipher definition
// (16-byte key, 3x256 key-setup rounds, no IV phase).
inline std::vector<std::uint8_t> vmpc_stream(const std::uint8_t* key, int klen,
                                             int length) {
  std::uint8_t P[256];
  for (int i = 0; i < 256; ++i) P[i] = static_cast<std::uint8_t>(i);
  std::uint8_t s = 0;
  for (int m = 0; m < 768; ++m) {
    const int n = m & 255;
    s = P[(s + P[n] + key[m % klen]) & 255];
    std::swap(P[n], P[s]);
  }
  std::vector<std::uint8_t> out(length);
  for (int n = 0; n < length; ++n) {
    const int i = n & 255;
    s = P[(s + P[i]) & 255];
    out[n] = P[(P[P[s]] + 1) & 255];
  }
  return out;
}

inline std::vector<std::uint8_t> vmpc(const std::vector<std::uint8_t>& in,
                                      int packet_bytes) {
  const std::size_t stream_in = 16 + static_cast<std::size_t>(packet_bytes);
  const std::size_t streams = in.size() / stream_in;
  std::vector<std::uint8_t> out;
  for (std::size_t s = 0; s < streams; ++s) {
    auto ks = vmpc_stream(in.data() + s * stream_in, 16, packet_bytes);
    out.insert(out.end(), ks.begin(), ks.end());
  }
  return out;
}

inline std::vector<std::uint8_t> bnn_layer(const std::vector<std::uint8_t>& in) {
  // each byte carries four (input, weight) bit pairs; 64 pairs per neuron
  const std::size_t neurons = in.size() / 16;
  std::vector<std::uint8_t> out(neurons);
  for (std::size_t n = 0; n < neurons; ++n) {
    int count = 0;
    for (std::size_t k = 0; k < 16; ++k) {
      const std::uint8_t byte = in[16 * n + k];
      for (int p = 0; p < 4; ++p) {
        const int ib = (byte >> (2 * p)) & 1;
        const int wb = (byte >> (2 * p + 1)) & 1;
        count += (ib == wb);
      }
    }
    out[n] = count >= 32 ? 0xFF : 0x00;
  }
  return out;
}

}  // namespace wloracle

inline std::vector<std::uint8_t> oracle(const WorkloadSpec& spec,
                                        const std::vector<std::uint8_t>& in) {
  using namespace wloracle;
  const std::string& w = spec.name;
  if (w == "vec_add_lut")
    return map_bytes(in, [](std::uint8_t x) {
      return static_cast<std::uint8_t>((x >> 4) + (x & 0xF));
    });
  if (w == "vec_mul_q") return spec.q_bits == 15 ? vec_mul_q15(in) : vec_mul_q7(in);
  if (w == "bitwise_and") return bitwise(in, "and");
  if (w == "bitwise_or") return bitwise(in, "or");
  if (w == "bitwise_xor") return bitwise(in, "xor");
  if (w == "bitwise_xnor") return bitwise(in, "xnor");
  if (w == "bitwise_not")
    return map_bytes(in, [](std::uint8_t x) { return static_cast<std::uint8_t>(~x); });
  if (w == "bitcount" || w == "bitcount_short")
    return map_bytes(in, [](std::uint8_t x) {
      return static_cast<std::uint8_t>(__builtin_popcount(x));
    });
  if (w == "crc8") return crc(in, 8, spec.packet_bytes);
  if (w == "crc16") return crc(in, 16, spec.packet_bytes);
  if (w == "crc32") return crc(in, 32, spec.packet_bytes);
  if (w == "salsa20") return salsa20(in);
  if (w == "vmpc") return vmpc(in, spec.packet_bytes);
  if (w == "binarize")
    return map_bytes(in, [&](std::uint8_t x) {
      return x >= spec.threshold ? std::uint8_t(0xFF) : std::uint8_t(0);
    });
  if (w == "color_grade")
    return map_bytes(in, [](std::uint8_t x) {
      return static_cast<std::uint8_t>((x * x + 127) / 255);
    });
  if (w == "bnn_layer") return bnn_layer(in);
  throw SimError(Err::ParseError, "unknown workload '" + w + "'");
}

// ---------------------------------------------------------------------------
// pLUTo-side implementations

namespace wldetail {

// plain per-byte table map: one query per input row
inline WorkloadResult run_map8(Machine& m, const LutProgram& prog,
                               const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const long n_rows = static_cast<long>((in.size() + rb - 1) / rb);
  const int tab = m.add_table(prog);
  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i)
          m.write_data(g, i, row_slice(in, (part.first + i) * rb, rb));
      },
      [&](int g, const Part& part, long i) {
        m.query(g, tab, i, part.count + i);
      });
  const auto parts = split_rows(n_rows, m.groups());
  res.output.resize(in.size());
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      const std::size_t off = (parts[g].first + i) * rb;
      std::memcpy(res.output.data() + off, r.data(),
                  std::min(rb, in.size() - off));
    }
  return res;
}

inline WorkloadResult run_bitwise(Machine& m, const std::string& op,
                                  const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const std::size_t half = in.size() / 2;
  // interleave a/b bits into 2-bit lanes
  std::vector<std::uint8_t> inter(2 * half, 0);
  for (std::size_t bit = 0; bit < half * 8; ++bit) {
    const int a = (in[bit / 8] >> (bit % 8)) & 1;
    const int b = (in[half + bit / 8] >> (bit % 8)) & 1;
    set_lane(inter, 2, bit, static_cast<std::uint64_t>(a | (b << 1)));
  }
  const long n_rows = static_cast<long>((inter.size() + rb - 1) / rb);
  const int tab = m.add_table(lut_bitwise(op));
  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i)
          m.write_data(g, i, row_slice(inter, (part.first + i) * rb, rb));
      },
      [&](int g, const Part& part, long i) { m.query(g, tab, i, part.count + i); });
  const auto parts = split_rows(n_rows, m.groups());
  std::vector<std::uint8_t> flat(2 * half, 0);
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      const std::size_t off = (parts[g].first + i) * rb;
      std::memcpy(flat.data() + off, r.data(), std::min(rb, flat.size() - off));
    }
  res.output.assign(half, 0);
  for (std::size_t bit = 0; bit < half * 8; ++bit)
    if (get_lane(flat, 2, bit) & 1)
      res.output[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  return res;
}

inline WorkloadResult run_bitcount_short(Machine& m,
                                         const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const long n_rows = static_cast<long>((in.size() + rb - 1) / rb);
  const int tab = m.add_table(lut_popcount4());
  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i)
          m.write_data(g, i, row_slice(in, (part.first + i) * rb, rb));
        m.write_data(g, 2 * part.count, splat(rb, 8, 0x0F));  // nibble mask
      },
      [&](int g, const Part& part, long i) {
        auto& u = m.unit(g);
        const long c0f = 2 * part.count;
        const long t_lo = u.take(), t_hi = u.take();
        const long r_lo = u.take(), r_hi = u.take();
        u.and_to(i, c0f, t_lo);
        u.copy(i, t_hi);
        u.shift(t_hi, 4, false, 8);
        m.query(g, tab, t_lo, r_lo);
        m.query(g, tab, t_hi, r_hi);
        u.ksa_add(r_lo, r_hi, part.count + i, 8);
        u.give(r_hi); u.give(r_lo); u.give(t_hi); u.give(t_lo);
      });
  const auto parts = split_rows(n_rows, m.groups());
  res.output.resize(in.size());
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      const std::size_t off = (parts[g].first + i) * rb;
      std::memcpy(res.output.data() + off, r.data(),
                  std::min(rb, in.size() - off));
    }
  return res;
}

inline WorkloadResult run_vec_mul_q7(Machine& m,
                                     const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const std::size_t pairs = in.size() / 2;
  const std::size_t lanes_per_row = rb / 2;
  const long n_rows = static_cast<long>((pairs + lanes_per_row - 1) / lanes_per_row);
  const int t_prod = m.add_table(lut_nibble_product(16));
  const int t_ma = m.add_table(lut_sign_mask(16, 0x8000));
  const int t_mb = m.add_table(lut_sign_mask(16, 0x0080));

  // per-position comparand keys over the a|b lane: a in bits 8..15, b in 0..7
  auto keys_for = [](int a_shift, int b_shift) {
    std::vector<std::uint64_t> k(256);
    for (int i = 0; i < 256; ++i)
      k[i] = (static_cast<std::uint64_t>(i >> 4) << a_shift) |
             (static_cast<std::uint64_t>(i & 0xF) << b_shift);
    return k;
  };
  struct Pos { std::uint64_t mask; std::vector<std::uint64_t> keys; int shift; };
  std::vector<Pos> pos = {
      {0xF0F0, keys_for(12, 4), 8},
      {0xF00F, keys_for(12, 0), 4},
      {0x0FF0, keys_for(8, 4), 4},
      {0x0F0F, keys_for(8, 0), 0},
  };

  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i) {
          Row r(rb, 0);
          for (std::size_t l = 0; l < lanes_per_row; ++l) {
            const std::size_t j = (part.first + i) * lanes_per_row + l;
            if (j >= pairs) break;
            const std::uint64_t lane =
                (static_cast<std::uint64_t>(in[2 * j]) << 8) | in[2 * j + 1];
            set_lane(r, 16, l, lane);
          }
          m.write_data(g, i, r);
        }
        m.write_data(g, 2 * part.count, splat(rb, 16, 0x00FF));
        m.write_data(g, 2 * part.count + 1, splat(rb, 16, 0xFF00));
        m.write_data(g, 2 * part.count + 2, splat(rb, 16, 0x0001));
      },
      [&](int g, const Part& part, long i) {
        auto& u = m.unit(g);
        const long c_lo = 2 * part.count, c_hi = c_lo + 1, c_one = c_lo + 2;
        const long acc = u.take(), t = u.take(), mk = u.take();
        bool first = true;
        for (const auto& p : pos) {
          const long dst = first ? acc : t;
          m.query_masked(g, t_prod, i, dst, p.mask, p.keys);
          if (p.shift) u.shift(dst, p.shift, true, 16);
          if (!first) u.ksa_add(acc, t, acc, 16);
          first = false;
        }
        // subtract (b<<8) when a is negative, (a<<8) when b is negative
        m.query(g, t_ma, i, mk);
        u.and_to(i, c_lo, t);
        u.shift(t, 8, true, 16);
        u.and_to(t, mk, t);
        u.not_to(t, t);
        u.ksa_add(acc, t, acc, 16);
        u.ksa_add(acc, c_one, acc, 16);
        m.query(g, t_mb, i, mk);
        u.and_to(i, c_hi, t);
        u.and_to(t, mk, t);
        u.not_to(t, t);
        u.ksa_add(acc, t, acc, 16);
        u.ksa_add(acc, c_one, acc, 16);
        u.shift(acc, 7, false, 16);
        u.copy(acc, part.count + i);
        u.give(mk); u.give(t); u.give(acc);
      });
  const auto parts = split_rows(n_rows, m.groups());
  res.output.resize(pairs);
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      for (std::size_t l = 0; l < lanes_per_row; ++l) {
        const std::size_t j = (parts[g].first + i) * lanes_per_row + l;
        if (j >= pairs) break;
        res.output[j] =
            static_cast<std::uint8_t>(get_lane(r, 16, l) & 0xFF);
      }
    }
  return res;
}

inline WorkloadResult run_vec_mul_q15(Machine& m,
                                      const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const std::size_t pairs = in.size() / 4;
  const std::size_t lanes_per_row = rb / 4;
  const long n_rows = static_cast<long>((pairs + lanes_per_row - 1) / lanes_per_row);
  const int t_prod = m.add_table(lut_nibble_product(32));
  const int t_ma = m.add_table(lut_sign_mask(32, 0x80000000ull));
  const int t_mb = m.add_table(lut_sign_mask(32, 0x00008000ull));

  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i) {
          Row r(rb, 0);
          for (std::size_t l = 0; l < lanes_per_row; ++l) {
            const std::size_t j = (part.first + i) * lanes_per_row + l;
            if (j >= pairs) break;
            const std::uint64_t a = in[4 * j + 2] | (in[4 * j + 3] << 8);
            const std::uint64_t b = in[4 * j] | (in[4 * j + 1] << 8);
            set_lane(r, 32, l, (a << 16) | b);
          }
          m.write_data(g, i, r);
        }
        m.write_data(g, 2 * part.count, splat(rb, 32, 0x0000FFFF));
        m.write_data(g, 2 * part.count + 1, splat(rb, 32, 0xFFFF0000));
        m.write_data(g, 2 * part.count + 2, splat(rb, 32, 0x00000001));
      },
      [&](int g, const Part& part, long i) {
        auto& u = m.unit(g);
        const long c_lo = 2 * part.count, c_hi = c_lo + 1, c_one = c_lo + 2;
        const long acc = u.take(), t = u.take(), mk = u.take();
        bool first = true;
        for (int ai = 0; ai < 4; ++ai)
          for (int bj = 0; bj < 4; ++bj) {
            std::vector<std::uint64_t> keys(256);
            for (int v = 0; v < 256; ++v)
              keys[v] = (static_cast<std::uint64_t>(v >> 4) << (16 + 4 * ai)) |
                        (static_cast<std::uint64_t>(v & 0xF) << (4 * bj));
            const std::uint64_t mask =
                (0xFull << (16 + 4 * ai)) | (0xFull << (4 * bj));
            const long dst = first ? acc : t;
            m.query_masked(g, t_prod, i, dst, mask, keys);
            const int sh = 4 * (ai + bj);
            if (sh) u.shift(dst, sh, true, 32);
            if (!first) u.ksa_add(acc, t, acc, 32);
            first = false;
          }
        m.query(g, t_ma, i, mk);
        u.and_to(i, c_lo, t);
        u.shift(t, 16, true, 32);
        u.and_to(t, mk, t);
        u.not_to(t, t);
        u.ksa_add(acc, t, acc, 32);
        u.ksa_add(acc, c_one, acc, 32);
        m.query(g, t_mb, i, mk);
        u.and_to(i, c_hi, t);
        u.and_to(t, mk, t);
        u.not_to(t, t);
        u.ksa_add(acc, t, acc, 32);
        u.ksa_add(acc, c_one, acc, 32);
        u.shift(acc, 15, false, 32);
        u.copy(acc, part.count + i);
        u.give(mk); u.give(t); u.give(acc);
      });
  const auto parts = split_rows(n_rows, m.groups());
  res.output.resize(2 * pairs);
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      for (std::size_t l = 0; l < lanes_per_row; ++l) {
        const std::size_t j = (parts[g].first + i) * lanes_per_row + l;
        if (j >= pairs) break;
        const std::uint64_t v = get_lane(r, 32, l);
        res.output[2 * j] = static_cast<std::uint8_t>(v);
        res.output[2 * j + 1] = static_cast<std::uint8_t>(v >> 8);
      }
    }
  return res;
}

inline WorkloadResult run_crc(Machine& m, int bits,
                              const std::vector<std::uint8_t>& in,
                              int packet_bytes) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const int width = bits;
  const std::size_t lanes = lane_count(rb, width);
  const long n_packets = static_cast<long>(in.size() / packet_bytes);
  if (n_packets < 1) throw SimError(Err::ParseError, "input shorter than one packet");
  const int tab = m.add_table(bits == 8 ? lut_crc8()
                              : bits == 16 ? lut_crc16() : lut_crc32());

  const auto parts = split_rows(n_packets, m.groups());
  std::vector<long> batches(m.groups());
  for (int g = 0; g < m.groups(); ++g)
    batches[g] = (parts[g].count + static_cast<long>(lanes) - 1) /
                 static_cast<long>(lanes);
  const long max_batches = *std::max_element(batches.begin(), batches.end());
  if ((max_batches * packet_bytes) + max_batches + 2 > m.user_rows())
    throw SimError(Err::CapacityExceeded, "packet batches do not fit the subarray");

  // rows [b*packet_bytes + j]: byte j of each packet of batch b, one per lane;
  // rows [batches*packet_bytes + b]: final state of batch b
  for (int g = 0; g < m.groups(); ++g) {
    for (long b = 0; b < batches[g]; ++b)
      for (int j = 0; j < packet_bytes; ++j) {
        Row r(rb, 0);
        for (std::size_t l = 0; l < lanes; ++l) {
          const long pkt = parts[g].first + b * static_cast<long>(lanes) +
                           static_cast<long>(l);
          if (pkt >= parts[g].first + parts[g].count) break;
          set_lane(r, width, l, in[pkt * packet_bytes + j]);
        }
        m.write_data(g, b * packet_bytes + j, r);
      }
  }

  WorkloadResult res;
  const auto before = m.sim().metrics_snapshot();
  run_parallel(m.sim(), m.groups(), [&](int g) {
    auto& u = m.unit(g);
    const long out_base = batches[g] * packet_bytes;
    for (long b = 0; b < batches[g]; ++b) {
      const long crc = u.take(), t1 = u.take(), t2 = u.take();
      if (bits == 8) u.copy(u.zero_row, crc);
      else u.copy(u.one_row, crc);
      for (int j = 0; j < packet_bytes; ++j) {
        const long in_row = b * packet_bytes + j;
        if (bits == 8) {
          u.xor_to(crc, in_row, crc);
          m.query(g, tab, crc, crc);
        } else if (bits == 16) {
          u.copy(crc, t1);
          u.shift(t1, 8, false, 16);
          u.xor_to(t1, in_row, t1);
          m.query(g, tab, t1, t2);
          u.shift(crc, 8, true, 16);
          u.xor_to(crc, t2, crc);
        } else {
          u.xor_to(crc, in_row, t1);
          m.query(g, tab, t1, t2);
          u.shift(crc, 8, false, 32);
          u.xor_to(crc, t2, crc);
        }
      }
      u.copy(crc, out_base + b);
      u.give(t2); u.give(t1); u.give(crc);
    }
  });
  aggregate(m, parts);
  res.metrics = Simulator::delta(before, m.sim().metrics_snapshot());

  const int out_bytes = bits / 8;
  res.output.resize(n_packets * out_bytes);
  for (int g = 0; g < m.groups(); ++g) {
    const long out_base = batches[g] * packet_bytes;
    for (long b = 0; b < batches[g]; ++b) {
      const auto& r = m.peek(g, out_base + b);
      for (std::size_t l = 0; l < lanes; ++l) {
        const long pkt =
            parts[g].first + b * static_cast<long>(lanes) + static_cast<long>(l);
        if (pkt >= parts[g].first + parts[g].count) break;
        std::uint64_t v = get_lane(r, width, l);
        if (bits == 32) v ^= 0xFFFFFFFFull;  // final inversion folded host-side
        for (int k = 0; k < out_bytes; ++k)
          res.output[pkt * out_bytes + k] = static_cast<std::uint8_t>(v >> (8 * k));
      }
    }
  }
  return res;
}

inline WorkloadResult run_salsa20(Machine& m,
                                  const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const std::size_t lanes = rb / 4;
  const long n_blocks = static_cast<long>(in.size() / 48);
  if (n_blocks < 1) throw SimError(Err::ParseError, "input shorter than one block");
  const auto parts = split_rows(n_blocks, m.groups());
  std::vector<long> batches(m.groups());
  for (int g = 0; g < m.groups(); ++g)
    batches[g] = (parts[g].count + static_cast<long>(lanes) - 1) /
                 static_cast<long>(lanes);
  const long max_batches = *std::max_element(batches.begin(), batches.end());
  if (max_batches * 32 > m.user_rows())
    throw SimError(Err::CapacityExceeded, "block batches do not fit the subarray");

  // rows [32b .. 32b+15]: initial state words; [32b+16 .. 32b+31]: working set
  for (int g = 0; g < m.groups(); ++g)
    for (long b = 0; b < batches[g]; ++b)
      for (int w = 0; w < 16; ++w) {
        Row r(rb, 0);
        for (std::size_t l = 0; l < lanes; ++l) {
          const long blk = parts[g].first + b * static_cast<long>(lanes) +
                           static_cast<long>(l);
          if (blk >= parts[g].first + parts[g].count) break;
          std::uint32_t st[16];
          wloracle::salsa20_state_from(in.data() + 48 * blk, st);
          set_lane(r, 32, l, st[w]);
        }
        m.write_data(g, 32 * b + w, r);
      }

  WorkloadResult res;
  const auto before = m.sim().metrics_snapshot();
  run_parallel(m.sim(), m.groups(), [&](int g) {
    auto& u = m.unit(g);
    for (long b = 0; b < batches[g]; ++b) {
      const long in0 = 32 * b, x0 = 32 * b + 16;
      for (int w = 0; w < 16; ++w) u.copy(in0 + w, x0 + w);
      const long t = u.take(), t2 = u.take();
      auto qr_step = [&](int dst, int a1, int a2, int rot) {
        u.ksa_add(x0 + a1, x0 + a2, t, 32);
        u.copy(t, t2);
        u.shift(t, rot, true, 32);
        u.shift(t2, 32 - rot, false, 32);
        u.or_to(t, t2, t);
        u.xor_to(x0 + dst, t, x0 + dst);
      };
      auto qr = [&](int a, int b2, int c, int d) {
        qr_step(b2, a, d, 7);
        qr_step(c, b2, a, 9);
        qr_step(d, c, b2, 13);
        qr_step(a, d, c, 18);
      };
      for (int r = 0; r < 10; ++r) {
        qr(0, 4, 8, 12); qr(5, 9, 13, 1); qr(10, 14, 2, 6); qr(15, 3, 7, 11);
        qr(0, 1, 2, 3); qr(5, 6, 7, 4); qr(10, 11, 8, 9); qr(15, 12, 13, 14);
      }
      for (int w = 0; w < 16; ++w) u.ksa_add(x0 + w, in0 + w, x0 + w, 32);
      u.give(t2); u.give(t);
    }
  });
  aggregate(m, parts);
  res.metrics = Simulator::delta(before, m.sim().metrics_snapshot());

  res.output.resize(n_blocks * 64);
  for (int g = 0; g < m.groups(); ++g)
    for (long b = 0; b < batches[g]; ++b)
      for (int w = 0; w < 16; ++w) {
        const auto& r = m.peek(g, 32 * b + 16 + w);
        for (std::size_t l = 0; l < lanes; ++l) {
          const long blk = parts[g].first + b * static_cast<long>(lanes) +
                           static_cast<long>(l);
          if (blk >= parts[g].first + parts[g].count) break;
          const std::uint64_t v = get_lane(r, 32, l);
          for (int k = 0; k < 4; ++k)
            res.output[64 * blk + 4 * w + k] =
                static_cast<std::uint8_t>(v >> (8 * k));
        }
      }
  return res;
}

inline WorkloadResult run_bnn(Machine& m, const std::vector<std::uint8_t>& in) {
  const std::size_t rb = m.cfg().row_size_bytes;
  const long n_rows = static_cast<long>((in.size() + rb - 1) / rb);
  const int t_xnor = m.add_table(lut_xnor2());
  const int t_pop = m.add_table(lut_popcount8());
  LutProgram thr;  // count >= 32 over classes of 32 (counts reach 64)
  thr.width = 8;
  thr.mask = 0xE0;
  thr.stride = 0x20;
  thr.entries = {0x00, 0xFF, 0xFF};
  const int t_thr = m.add_table(thr);

  WorkloadResult res;
  res.metrics = run_rowwise(
      m, n_rows,
      [&](int g, const Part& part) {
        for (long i = 0; i < part.count; ++i)
          m.write_data(g, i, row_slice(in, (part.first + i) * rb, rb));
      },
      [&](int g, const Part& part, long i) {
        auto& u = m.unit(g);
        const long t1 = u.take(), t2 = u.take();
        m.query(g, t_xnor, i, t1);
        m.query(g, t_pop, t1, t1);
        // fold the 16 per-byte counts of each 128-bit lane into its low byte
        for (int s = 8; s <= 64; s <<= 1) {
          u.copy(t1, t2);
          drisa_shift(*u.sim, u.sub, t2, s, false, 128);
          u.ksa_add(t1, t2, t1, 8);
        }
        m.query(g, t_thr, t1, part.count + i);
        u.give(t2); u.give(t1);
      });
  const auto parts = split_rows(n_rows, m.groups());
  const std::size_t neurons = in.size() / 16;
  res.output.resize(neurons);
  for (int g = 0; g < m.groups(); ++g)
    for (long i = 0; i < parts[g].count; ++i) {
      const auto& r = m.peek(g, parts[g].count + i);
      const std::size_t neuron0 = (parts[g].first + i) * (rb / 16);
      for (std::size_t k = 0; k < rb / 16 && neuron0 + k < neurons; ++k)
        res.output[neuron0 + k] = r[16 * k];
    }
  return res;
}

inline WorkloadResult run_vmpc(Machine& m, const std::vector<std::uint8_t>& in,
                               int packet_bytes) {
  const std::size_t stream_in = 16 + static_cast<std::size_t>(packet_bytes);
  const long n_streams = static_cast<long>(in.size() / stream_in);
  if (n_streams < 1) throw SimError(Err::ParseError, "input shorter than one stream");
  const int t_inc = m.add_table(lut_increment8());
  const std::size_t rb = m.cfg().row_size_bytes;
  const long p_base = 256;  // P sits above the increment table rows
  if (m.cfg().rows_per_subarray < p_base + 256)
    throw SimError(Err::CapacityExceeded, "permutation table does not fit");

  const auto parts = split_rows(n_streams, m.groups());
  WorkloadResult res;
  res.output.resize(n_streams * packet_bytes);
  const auto before = m.sim().metrics_snapshot();
  run_parallel(m.sim(), m.groups(), [&](int g) {
    auto& sim = m.sim();
    auto& u = m.unit(g);
    LoadedLut P;
    P.sub = m.lut_sub(g);
    P.first_row = p_base;
    P.n = 256;
    P.width = 8;
    P.mask = 0xFF;
    const LoadedLut& inc = m.table(t_inc, g);
    for (long si = 0; si < parts[g].count; ++si) {
      const long stream = parts[g].first + si;
      const std::uint8_t* key = in.data() + stream * stream_in;
      // permutation setup is host-driven: the controller reads/writes P rows
      for (int i = 0; i < 256; ++i)
        write_row(sim, P.sub, p_base + i, splat(rb, 8, i));
      std::uint8_t s = 0;
      for (int mm = 0; mm < 768; ++mm) {
        const int n = mm & 255;
        const std::uint8_t pn = read_row(sim, P.sub, p_base + n)[0];
        const int idx = (s + pn + key[mm % 16]) & 255;
        s = read_row(sim, P.sub, p_base + idx)[0];
        // swap P[n] <-> P[s]: the new s is itself the swap index
        const std::uint8_t pv = read_row(sim, P.sub, p_base + s)[0];
        write_row(sim, P.sub, p_base + n, splat(rb, 8, pv));
        write_row(sim, P.sub, p_base + s, splat(rb, 8, pn));
      }
      // keystream: chained in-memory queries
      const long s_row = u.take(), t = u.take(), r1 = u.take(), c_idx = u.take();
      write_row(sim, m.data_sub(g), s_row, splat(rb, 8, s));
      auto qp = [&](const LoadedLut& lut, long src, long dst) {
        pluto_query(sim, lut, m.data_sub(g), src, m.data_sub(g));
        sim.exec(Command::wr_from_buffer(m.data_sub(g), dst));
        if (m.cfg().variant == Variant::GSA) reload_lut(sim, lut);
      };
      for (int n = 0; n < packet_bytes; ++n) {
        write_row(sim, m.data_sub(g), c_idx, splat(rb, 8, n & 255));
        qp(P, c_idx, r1);               // P[n]
        u.ksa_add(s_row, r1, t, 8);     // s + P[n]
        qp(P, t, s_row);                // s = P[...]
        qp(P, s_row, r1);               // P[s]
        qp(P, r1, r1);                  // P[P[s]]
        qp(inc, r1, r1);                // +1
        qp(P, r1, r1);                  // P[...]
        res.output[stream * packet_bytes + n] =
            read_row(sim, m.data_sub(g), r1)[0];
      }
      u.give(c_idx); u.give(r1); u.give(t); u.give(s_row);
    }
  });
  wldetail::aggregate(m, parts);
  res.metrics = Simulator::delta(before, m.sim().metrics_snapshot());
  return res;
}

}  // namespace wldetail

inline WorkloadResult run_workload(Machine& m, const WorkloadSpec& spec,
                                   const std::vector<std::uint8_t>& in) {
  using namespace wldetail;
  const std::string& w = spec.name;
  if (w == "vec_add_lut") return run_map8(m, lut_nibble_add(), in);
  if (w == "vec_mul_q")
    return spec.q_bits == 15 ? run_vec_mul_q15(m, in) : run_vec_mul_q7(m, in);
  if (w == "bitwise_and") return run_bitwise(m, "and", in);
  if (w == "bitwise_or") return run_bitwise(m, "or", in);
  if (w == "bitwise_xor") return run_bitwise(m, "xor", in);
  if (w == "bitwise_xnor") return run_bitwise(m, "xnor", in);
  if (w == "bitwise_not") return run_map8(m, lut_not1(), in);
  if (w == "bitcount") return run_map8(m, lut_popcount8(), in);
  if (w == "bitcount_short") return run_bitcount_short(m, in);
  if (w == "crc8") return run_crc(m, 8, in, spec.packet_bytes);
  if (w == "crc16") return run_crc(m, 16, in, spec.packet_bytes);
  if (w == "crc32") return run_crc(m, 32, in, spec.packet_bytes);
  if (w == "salsa20") return run_salsa20(m, in);
  if (w == "vmpc") return run_vmpc(m, in, spec.packet_bytes);
  if (w == "binarize") {
    if (spec.threshold != 128)
      throw SimError(Err::Unsupported, "binarize is calibrated for the static 50% cut");
    return run_map8(m, compress_with_mask(lut_threshold_full(128), 0x80), in);
  }
  if (w == "color_grade") return run_map8(m, lut_color_curve(), in);
  if (w == "bnn_layer") return run_bnn(m, in);
  throw SimError(Err::ParseError, "unknown workload '" + w + "'");
}

inline WorkloadSpec load_workload_spec(std::istream& is, const std::string& what) {
  auto kv = parse_kv(is, what);
  WorkloadSpec s;
  for (const auto& [k, v] : kv) {
    try {
      if (k == "workload") s.name = v;
      else if (k == "input_bytes") s.input_bytes = std::stoull(v);
      else if (k == "seed") s.seed = std::stoull(v);
      else if (k == "packet_bytes") s.packet_bytes = std::stoi(v);
      else if (k == "q_bits") s.q_bits = std::stoi(v);
      else if (k == "threshold") s.threshold = std::stoi(v);
      else if (k == "input_file") s.input_file = v;
      else throw SimError(Err::ParseError, what + ": unknown key '" + k + "'");
    } catch (const SimError&) {
      throw;
    } catch (...) {
      throw SimError(Err::ParseError, what + ": bad value for key '" + k + "'");
    }
  }
  return s;
}

}  // namespace pluto
