#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pluto/common.hpp"

namespace pluto {

enum class Variant { GSA, BSA, GMC };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::GSA: return "GSA";
    case Variant::BSA: return "BSA";
    case Variant::GMC: return "GMC";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "GSA") return Variant::GSA;
  if (s == "BSA") return Variant::BSA;
  if (s == "GMC") return Variant::GMC;
  throw SimError(Err::ParseError, "unknown variant '" + s + "'");
}

struct DeviceConfig {
  // geometry
  int channels = 1;
  int ranks = 1;
  int banks_per_rank = 16;
  int subarrays_per_bank = 32;
  int rows_per_subarray = 512;
  std::size_t row_size_bytes = 8192;

  // timing (ps)
  Ps tCK = ns_to_ps(0.8333);
  Ps tRCD = ns_to_ps(14.16);
  Ps tRAS = ns_to_ps(32.0);
  Ps tRP = ns_to_ps(14.16);
  Ps tRC = ns_to_ps(46.16);
  Ps tFAW = 0;
  Ps tRBM = ns_to_ps(16.68);
  Ps tFF = ns_to_ps(0.8333);

  // energy (fJ)
  Fj eACT = pj_to_fj(909.5);
  Fj ePRE = pj_to_fj(60.0);
  Fj eRBM = pj_to_fj(181.9);
  Fj eFF = pj_to_fj(100.0);
  Fj eCMP = pj_to_fj(50.0);

  Variant variant = Variant::BSA;
  int parallel_subarrays = 16;
  std::string profile_name = "custom";

  // Bandwidth model anchor: GSA internal bandwidth at 16 GB capacity (GB/s).
  double bw_anchor_gsa_16gb = 508.0;

  int total_subarrays() const {
    return channels * ranks * banks_per_rank * subarrays_per_bank;
  }
  int subarrays_per_rank() const { return banks_per_rank * subarrays_per_bank; }
  int rank_of(int subarray) const { return subarray / subarrays_per_rank(); }
  std::size_t subarray_bytes() const {
    return static_cast<std::size_t>(rows_per_subarray) * row_size_bytes;
  }

  void validate() const {
    if (channels < 1 || ranks < 1 || banks_per_rank < 1 || subarrays_per_bank < 1)
      throw SimError(Err::ParseError, "geometry counts must be positive");
    if (rows_per_subarray <= 0)
      throw SimError(Err::ParseError, "rows_per_subarray must be > 0");
    if (row_size_bytes == 0 || !is_pow2(row_size_bytes))
      throw SimError(Err::ParseError, "row_size_bytes must be a power of two");
    if (tRC > tRAS + tRP)
      throw SimError(Err::ParseError, "tRC must not exceed tRAS + tRP");
    if (tFAW < 0) throw SimError(Err::ParseError, "tFAW must be >= 0");
    if (eACT < 0 || ePRE < 0 || eRBM < 0 || eFF < 0 || eCMP < 0)
      throw SimError(Err::ParseError, "energies must be >= 0");
    if (parallel_subarrays < 1 || parallel_subarrays > total_subarrays())
      throw SimError(Err::ParseError, "parallel_subarrays out of range");
  }
};

// Built-in profiles.
//
// "paper-DDR4": DDR4-2400 17-17-17 CAS class.  tRAS/tRC are not given by the
// timing spec string; tRAS=32 and tRC=tRAS+tRP are used.  The nominal tFAW is
// calibrated so that a 16-subarray 256-row query pays ~20% at nominal tFAW.
//
// "paper-table8": solved so a 2-entry LUT query costs 105 ns and a 4-entry
// query costs 165 ns: tRC = 30, tRCD = tRP = 14.16, tRBM = 16.68, and
// tRAS = tRC - tRP = 15.84.
inline DeviceConfig profile(const std::string& name) {
  DeviceConfig c;
  c.profile_name = name;
  if (name == "paper-DDR4") {
    c.tFAW = ns_to_ps(13.85);
    return c;
  }
  if (name == "paper-3DS") {
    c.row_size_bytes = 256;
    c.parallel_subarrays = 512;
    c.subarrays_per_bank = 64;
    c.tFAW = ns_to_ps(13.85);
    return c;
  }
  if (name == "paper-table8") {
    c.tRCD = ns_to_ps(14.16);
    c.tRP = ns_to_ps(14.16);
    c.tRAS = ns_to_ps(15.84);
    c.tRC = ns_to_ps(30.0);
    c.tRBM = ns_to_ps(16.68);
    c.tFAW = 0;
    return c;
  }
  if (name == "desk") {
    // small rows so 64 KB inputs span enough rows for parallelism studies
    c.row_size_bytes = 1024;
    c.subarrays_per_bank = 64;
    c.tFAW = 0;
    return c;
  }
  throw SimError(Err::ParseError, "unknown profile '" + name + "'");
}

// ---- flat key/value config files -------------------------------------------

inline std::map<std::string, std::string> parse_kv(std::istream& in,
                                                   const std::string& what) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    auto ltrim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t\r\n"));
      const auto e = s.find_last_not_of(" \t\r\n");
      s.erase(e == std::string::npos ? 0 : e + 1);
    };
    ltrim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SimError(Err::ParseError, what + " line " + std::to_string(lineno) +
                                          ": expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    ltrim(key);
    ltrim(val);
    if (key.empty())
      throw SimError(Err::ParseError, what + " line " + std::to_string(lineno) +
                                          ": empty key");
    kv[key] = val;
  }
  return kv;
}

inline DeviceConfig load_device_config(std::istream& in,
                                       const std::string& what = "config") {
  auto kv = parse_kv(in, what);
  DeviceConfig c;
  if (auto it = kv.find("profile"); it != kv.end()) {
    c = profile(it->second);
    kv.erase(it);
  }
  auto to_ll = [&](const std::string& k, const std::string& v) {
    try {
      return std::stoll(v);
    } catch (...) {
      throw SimError(Err::ParseError, what + ": bad integer for key '" + k + "'");
    }
  };
  auto to_d = [&](const std::string& k, const std::string& v) {
    try {
      return std::stod(v);
    } catch (...) {
      throw SimError(Err::ParseError, what + ": bad number for key '" + k + "'");
    }
  };
  for (const auto& [k, v] : kv) {
    if (k == "channels") c.channels = static_cast<int>(to_ll(k, v));
    else if (k == "ranks") c.ranks = static_cast<int>(to_ll(k, v));
    else if (k == "banks_per_rank") c.banks_per_rank = static_cast<int>(to_ll(k, v));
    else if (k == "subarrays_per_bank") c.subarrays_per_bank = static_cast<int>(to_ll(k, v));
    else if (k == "rows_per_subarray") c.rows_per_subarray = static_cast<int>(to_ll(k, v));
    else if (k == "row_size_bytes") c.row_size_bytes = static_cast<std::size_t>(to_ll(k, v));
    else if (k == "tCK") c.tCK = ns_to_ps(to_d(k, v));
    else if (k == "tRCD") c.tRCD = ns_to_ps(to_d(k, v));
    else if (k == "tRAS") c.tRAS = ns_to_ps(to_d(k, v));
    else if (k == "tRP") c.tRP = ns_to_ps(to_d(k, v));
    else if (k == "tRC") c.tRC = ns_to_ps(to_d(k, v));
    else if (k == "tFAW") c.tFAW = ns_to_ps(to_d(k, v));
    else if (k == "tRBM") c.tRBM = ns_to_ps(to_d(k, v));
    else if (k == "tFF") c.tFF = ns_to_ps(to_d(k, v));
    else if (k == "eACT") c.eACT = pj_to_fj(to_d(k, v));
    else if (k == "ePRE") c.ePRE = pj_to_fj(to_d(k, v));
    else if (k == "eRBM") c.eRBM = pj_to_fj(to_d(k, v));
    else if (k == "eFF") c.eFF = pj_to_fj(to_d(k, v));
    else if (k == "eCMP") c.eCMP = pj_to_fj(to_d(k, v));
    else if (k == "variant") c.variant = variant_from_string(v);
    else if (k == "parallel_subarrays") c.parallel_subarrays = static_cast<int>(to_ll(k, v));
    else if (k == "bw_anchor_gsa_16gb") c.bw_anchor_gsa_16gb = to_d(k, v);
    else throw SimError(Err::ParseError, what + ": unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

inline DeviceConfig load_device_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError(Err::ParseError, "cannot open config file " + path);
  return load_device_config(in, path);
}

}  // namespace pluto
