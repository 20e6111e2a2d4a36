#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pluto/common.hpp"

namespace pluto {

enum class CmdKind { ACT, PRE, RD, WR, AAP, RBM, ROW_SWEEP, TRA, SHIFT };

inline const char* cmd_name(CmdKind k) {
  switch (k) {
    case CmdKind::ACT: return "ACT";
    case CmdKind::PRE: return "PRE";
    case CmdKind::RD: return "RD";
    case CmdKind::WR: return "WR";
    case CmdKind::AAP: return "AAP";
    case CmdKind::RBM: return "RBM";
    case CmdKind::ROW_SWEEP: return "ROW_SWEEP";
    case CmdKind::TRA: return "TRA";
    case CmdKind::SHIFT: return "SHIFT";
  }
  return "?";
}

// One DRAM/pLUTo command.  Subarrays are addressed by a flat device-wide
// index; the rank (for tFAW accounting) is derived from the device geometry.
struct Command {
  CmdKind kind = CmdKind::ACT;
  Ps issue_time = 0;

  int sub = 0;    // target subarray
  int sub2 = 0;   // RBM destination / row-sweep source subarray
  long row = 0;   // row operand (ACT/RD/WR row, AAP src, sweep first, TRA a, SHIFT row)
  long row2 = 0;  // AAP dst, TRA b
  long row3 = 0;  // TRA c
  long count = 1; // sweep row count, SHIFT amount
  int width = 0;  // sweep/SHIFT lane width (bits)
  std::uint64_t mask = ~0ull;  // sweep match mask over the comparand
  std::uint64_t offset = 0;    // sweep comparand offset (large-LUT addressing)
  std::uint64_t stride = 1;    // sweep comparand stride (compressed LUTs)
  bool flag = false;           // AAP: invert; SHIFT: left
  std::vector<std::uint64_t> keys;  // sweep explicit per-row comparand keys
  std::optional<Row> payload;       // WR host data; nullopt = write from buffer

  static Command act(int sub, long row) {
    Command c; c.kind = CmdKind::ACT; c.sub = sub; c.row = row; return c;
  }
  static Command pre(int sub) {
    Command c; c.kind = CmdKind::PRE; c.sub = sub; return c;
  }
  static Command rd(int sub, long row) {
    Command c; c.kind = CmdKind::RD; c.sub = sub; c.row = row; return c;
  }
  static Command wr(int sub, long row, Row data) {
    Command c; c.kind = CmdKind::WR; c.sub = sub; c.row = row;
    c.payload = std::move(data); return c;
  }
  static Command wr_from_buffer(int sub, long row) {
    Command c; c.kind = CmdKind::WR; c.sub = sub; c.row = row; return c;
  }
  static Command aap(int sub, long src, long dst, bool invert = false) {
    Command c; c.kind = CmdKind::AAP; c.sub = sub; c.row = src; c.row2 = dst;
    c.flag = invert; return c;
  }
  static Command rbm(int src_sub, int dst_sub) {
    Command c; c.kind = CmdKind::RBM; c.sub = src_sub; c.sub2 = dst_sub; return c;
  }
  static Command tra(int sub, long a, long b, long cc) {
    Command c; c.kind = CmdKind::TRA; c.sub = sub; c.row = a; c.row2 = b;
    c.row3 = cc; return c;
  }
  static Command shift(int sub, long row, int amount, bool left, int width) {
    Command c; c.kind = CmdKind::SHIFT; c.sub = sub; c.row = row;
    c.count = amount; c.flag = left; c.width = width; return c;
  }
  static Command row_sweep(int lut_sub, long first, long n, int width,
                           std::uint64_t mask, int src_sub, std::uint64_t offset = 0,
                           std::uint64_t stride = 1,
                           std::vector<std::uint64_t> keys = {}) {
    Command c; c.kind = CmdKind::ROW_SWEEP; c.sub = lut_sub; c.row = first;
    c.count = n; c.width = width; c.mask = mask; c.sub2 = src_sub;
    c.offset = offset; c.stride = stride; c.keys = std::move(keys); return c;
  }
};

// ---- text form: one command per line, `<time_ns> <KIND> <args...>` ---------

namespace detail {

inline std::string ps_to_ns_str(Ps ps) {
  char buf[64];
  const Ps ns = ps / 1000;
  const Ps frac = ps % 1000;
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(ns),
                static_cast<long long>(frac < 0 ? -frac : frac));
  return buf;
}

inline Ps ns_str_to_ps(const std::string& s) {
  const auto dot = s.find('.');
  try {
    if (dot == std::string::npos) return std::stoll(s) * 1000;
    const Ps ns = std::stoll(s.substr(0, dot));
    std::string frac = s.substr(dot + 1);
    frac.resize(3, '0');
    return ns * 1000 + std::stoll(frac);
  } catch (...) {
    throw SimError(Err::ParseError, "bad timestamp '" + s + "'");
  }
}

inline std::string hex_bytes(const Row& r) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(r.size() * 2);
  for (std::uint8_t b : r) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

inline Row bytes_from_hex(const std::string& s) {
  if (s.size() % 2) throw SimError(Err::ParseError, "odd hex payload length");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw SimError(Err::ParseError, "bad hex digit");
  };
  Row r(s.size() / 2);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = static_cast<std::uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  return r;
}

}  // namespace detail

inline std::string serialize_command(const Command& c) {
  std::ostringstream os;
  os << detail::ps_to_ns_str(c.issue_time) << ' ' << cmd_name(c.kind);
  auto hex = [](std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return std::string(buf);
  };
  switch (c.kind) {
    case CmdKind::ACT: os << ' ' << c.sub << ' ' << c.row; break;
    case CmdKind::PRE: os << ' ' << c.sub; break;
    case CmdKind::RD: os << ' ' << c.sub << ' ' << c.row; break;
    case CmdKind::WR:
      os << ' ' << c.sub << ' ' << c.row << ' '
         << (c.payload ? detail::hex_bytes(*c.payload) : std::string("-"));
      break;
    case CmdKind::AAP:
      os << ' ' << c.sub << ' ' << c.row << ' ' << c.row2 << ' ' << (c.flag ? 1 : 0);
      break;
    case CmdKind::RBM: os << ' ' << c.sub << ' ' << c.sub2; break;
    case CmdKind::TRA:
      os << ' ' << c.sub << ' ' << c.row << ' ' << c.row2 << ' ' << c.row3;
      break;
    case CmdKind::SHIFT:
      os << ' ' << c.sub << ' ' << c.row << ' ' << c.count << ' '
         << (c.flag ? 'L' : 'R') << ' ' << c.width;
      break;
    case CmdKind::ROW_SWEEP: {
      os << ' ' << c.sub << ' ' << c.row << ' ' << c.count << ' ' << c.width << ' '
         << hex(c.mask) << ' ' << c.sub2 << ' ' << hex(c.offset) << ' '
         << hex(c.stride);
      if (!c.keys.empty()) {
        os << ' ';
        for (std::size_t i = 0; i < c.keys.size(); ++i)
          os << (i ? "," : "") << hex(c.keys[i]);
      }
      break;
    }
  }
  return os.str();
}

inline Command parse_command(const std::string& line) {
  std::istringstream is(line);
  std::string time_s, kind_s;
  if (!(is >> time_s >> kind_s))
    throw SimError(Err::ParseError, "short trace line '" + line + "'");
  Command c;
  c.issue_time = detail::ns_str_to_ps(time_s);
  auto need = [&](auto& v) {
    if (!(is >> v)) throw SimError(Err::ParseError, "bad operands in '" + line + "'");
  };
  auto need_hex = [&]() {
    std::string s;
    need(s);
    try {
      return std::stoull(s, nullptr, 16);
    } catch (...) {
      throw SimError(Err::ParseError, "bad hex operand in '" + line + "'");
    }
  };
  if (kind_s == "ACT") { c.kind = CmdKind::ACT; need(c.sub); need(c.row); }
  else if (kind_s == "PRE") { c.kind = CmdKind::PRE; need(c.sub); }
  else if (kind_s == "RD") { c.kind = CmdKind::RD; need(c.sub); need(c.row); }
  else if (kind_s == "WR") {
    c.kind = CmdKind::WR; need(c.sub); need(c.row);
    std::string p; need(p);
    if (p != "-") c.payload = detail::bytes_from_hex(p);
  } else if (kind_s == "AAP") {
    c.kind = CmdKind::AAP; need(c.sub); need(c.row); need(c.row2);
    int inv; need(inv); c.flag = inv != 0;
  } else if (kind_s == "RBM") { c.kind = CmdKind::RBM; need(c.sub); need(c.sub2); }
  else if (kind_s == "TRA") {
    c.kind = CmdKind::TRA; need(c.sub); need(c.row); need(c.row2); need(c.row3);
  } else if (kind_s == "SHIFT") {
    c.kind = CmdKind::SHIFT; need(c.sub); need(c.row); need(c.count);
    std::string d; need(d);
    if (d != "L" && d != "R") throw SimError(Err::ParseError, "bad shift dir");
    c.flag = d == "L";
    need(c.width);
  } else if (kind_s == "ROW_SWEEP") {
    c.kind = CmdKind::ROW_SWEEP;
    need(c.sub); need(c.row); need(c.count); need(c.width);
    c.mask = need_hex();
    need(c.sub2);
    c.offset = need_hex();
    c.stride = need_hex();
    std::string ks;
    if (is >> ks) {
      std::istringstream kis(ks);
      std::string tok;
      while (std::getline(kis, tok, ','))
        c.keys.push_back(std::stoull(tok, nullptr, 16));
    }
  } else {
    throw SimError(Err::ParseError, "unknown command '" + kind_s + "'");
  }
  return c;
}

// A trace is a serial command stream with optional parallel blocks; a block's
// chains ran on disjoint subarray groups and were timed by the scheduler, so
// the structure must survive serialization for replay to reproduce timing.
struct ParBlock {
  std::vector<std::vector<Command>> chains;
};
using TraceItem = std::variant<Command, ParBlock>;
using ProgramTrace = std::vector<TraceItem>;

inline void write_trace(std::ostream& os, const ProgramTrace& trace) {
  for (const auto& item : trace) {
    if (const auto* c = std::get_if<Command>(&item)) {
      os << serialize_command(*c) << '\n';
    } else {
      const auto& blk = std::get<ParBlock>(item);
      os << "PAR " << blk.chains.size() << '\n';
      for (const auto& chain : blk.chains) {
        os << "CHAIN\n";
        for (const auto& c : chain) os << serialize_command(c) << '\n';
      }
      os << "ENDPAR\n";
    }
  }
}

inline ProgramTrace read_trace(std::istream& is) {
  ProgramTrace trace;
  std::string line;
  ParBlock* open_block = nullptr;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("PAR ", 0) == 0) {
      if (open_block) throw SimError(Err::ParseError, "nested PAR block");
      trace.emplace_back(ParBlock{});
      open_block = &std::get<ParBlock>(trace.back());
      continue;
    }
    if (line == "CHAIN") {
      if (!open_block) throw SimError(Err::ParseError, "CHAIN outside PAR block");
      open_block->chains.emplace_back();
      continue;
    }
    if (line == "ENDPAR") {
      if (!open_block) throw SimError(Err::ParseError, "ENDPAR without PAR");
      open_block = nullptr;
      continue;
    }
    Command c = parse_command(line);
    if (open_block) {
      if (open_block->chains.empty())
        throw SimError(Err::ParseError, "command before first CHAIN");
      open_block->chains.back().push_back(std::move(c));
    } else {
      trace.emplace_back(std::move(c));
    }
  }
  if (open_block) throw SimError(Err::ParseError, "unterminated PAR block");
  return trace;
}

}  // namespace pluto
