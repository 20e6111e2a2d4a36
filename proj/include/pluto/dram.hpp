#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pluto/common.hpp"
#include "pluto/config.hpp"
#include "pluto/sha256.hpp"
#include "pluto/trace.hpp"

namespace pluto {

struct RunMetrics {
  Ps elapsed = 0;
  Fj energy = 0;
  std::uint64_t activations = 0;
  std::map<CmdKind, std::uint64_t> histogram;
  double bandwidth_GBps = 0.0;

  RunMetrics& operator+=(const RunMetrics& o) {
    elapsed += o.elapsed;
    energy += o.energy;
    activations += o.activations;
    for (const auto& [k, v] : o.histogram) histogram[k] += v;
    return *this;
  }
  double elapsed_ns() const { return ps_to_ns(elapsed); }
  double energy_pJ() const { return fj_to_pj(energy); }
};

struct SweepResult {
  Row destination;
  std::vector<bool> matched_lane_bitmap;
  long rows_swept = 0;
  Ps elapsed = 0;
  Fj energy = 0;
  std::vector<long> rows_invalidated;
  long matched_rows = 0;
};

struct Subarray {
  std::vector<Row> rows;        // empty vector == all-zero row
  std::vector<bool> row_valid;  // false after a destructive GSA sweep
  Row row_buffer;
  bool buffer_valid = false;
  Row ff_buffer;  // BSA only
  std::optional<long> activated_row;
  Ps last_act = std::numeric_limits<Ps>::min() / 4;
  Ps open_since = 0;  // issue time of the activation that opened the row

  bool precharged() const { return !activated_row.has_value(); }
};

// Per-command activation pattern used for both serial execution and the
// multi-subarray scheduler.  A command issues `n_acts` activate events spaced
// `act_gap` apart and completes `tail` after the last one; commands with no
// activate events simply take `duration`.
struct CmdAtoms {
  int n_acts = 0;
  Ps act_gap = 0;
  Ps tail = 0;
  Ps duration = 0;
};

inline CmdAtoms atoms_for(const Command& c, const DeviceConfig& cfg) {
  CmdAtoms a;
  switch (c.kind) {
    case CmdKind::ACT: a.n_acts = 1; a.tail = cfg.tRCD; break;
    case CmdKind::PRE: a.duration = cfg.tRP; break;
    case CmdKind::RD: a.duration = cfg.tCK; break;
    case CmdKind::WR:
      if (c.payload) { a.n_acts = 1; a.tail = cfg.tRAS + cfg.tRP; }
      else a.duration = cfg.tCK;
      break;
    case CmdKind::AAP:
    case CmdKind::SHIFT:
      a.n_acts = 2; a.act_gap = cfg.tRAS; a.tail = cfg.tRAS + cfg.tRP;
      break;
    case CmdKind::TRA: a.n_acts = 1; a.tail = cfg.tRAS + cfg.tRP; break;
    case CmdKind::RBM: a.duration = cfg.tRBM; break;
    case CmdKind::ROW_SWEEP: {
      a.n_acts = static_cast<int>(c.count);
      if (cfg.variant == Variant::BSA) {
        a.act_gap = cfg.tRAS + cfg.tRP;
        a.tail = cfg.tRAS + cfg.tRP;
      } else {
        a.act_gap = cfg.tRC;
        a.tail = cfg.tRC + cfg.tRP;
      }
      break;
    }
  }
  return a;
}

class Simulator {
 public:
  explicit Simulator(DeviceConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    subs_.resize(cfg_.total_subarrays());
    for (auto& s : subs_) {
      s.rows.resize(cfg_.rows_per_subarray);
      s.row_valid.assign(cfg_.rows_per_subarray, true);
    }
    windows_.resize(cfg_.ranks * cfg_.channels);
    zero_row_.assign(cfg_.row_size_bytes, 0);
  }

  const DeviceConfig& config() const { return cfg_; }
  Ps now() const { return now_; }
  Fj energy() const { return energy_; }
  std::uint64_t activations() const { return acts_; }
  const std::map<CmdKind, std::uint64_t>& histogram() const { return hist_; }

  RunMetrics metrics_snapshot() const {
    RunMetrics m;
    m.elapsed = now_;
    m.energy = energy_;
    m.activations = acts_;
    m.histogram = hist_;
    return m;
  }
  static RunMetrics delta(const RunMetrics& before, const RunMetrics& after) {
    RunMetrics m;
    m.elapsed = after.elapsed - before.elapsed;
    m.energy = after.energy - before.energy;
    m.activations = after.activations - before.activations;
    m.histogram = after.histogram;
    for (const auto& [k, v] : before.histogram) {
      m.histogram[k] -= v;
      if (m.histogram[k] == 0) m.histogram.erase(k);
    }
    return m;
  }

  void record_to(ProgramTrace* sink) { sink_ = sink; }
  ProgramTrace* recording() const { return sink_; }
  bool in_parallel() const { return in_parallel_; }
  void set_in_parallel(bool v) { in_parallel_ = v; }

  Subarray& sub(int i) { return subs_.at(i); }
  const Subarray& sub(int i) const { return subs_.at(i); }
  const SweepResult& last_sweep() const { return last_sweep_; }

  const Row& row_view(int sub_i, long row) const {
    const auto& r = subs_.at(sub_i).rows.at(row);
    return r.empty() ? zero_row_ : r;
  }
  Row& row_ref(int sub_i, long row) {
    auto& r = subs_.at(sub_i).rows.at(row);
    if (r.empty()) r.assign(cfg_.row_size_bytes, 0);
    return r;
  }

  // Directly advance the clock (used when a caller replaces serial elapsed
  // time with a scheduled makespan).
  void set_now(Ps t) { now_ = t; }

  void exec(Command c) { exec_ref(c); }

  void exec_ref(Command& c) {
    c.issue_time = now_;
    switch (c.kind) {
      case CmdKind::ACT: do_act(c); break;
      case CmdKind::PRE: do_pre(c); break;
      case CmdKind::RD: do_rd(c); break;
      case CmdKind::WR: do_wr(c); break;
      case CmdKind::AAP: do_aap(c); break;
      case CmdKind::RBM: do_rbm(c); break;
      case CmdKind::TRA: do_tra(c); break;
      case CmdKind::SHIFT: do_shift(c); break;
      case CmdKind::ROW_SWEEP: do_sweep(c); break;
    }
    ++hist_[c.kind];
    if (sink_) sink_->emplace_back(c);
  }

  void replay(const std::vector<Command>& trace) {
    for (Command c : trace) exec(std::move(c));
  }

  // Digest of the logical DRAM state.  Untouched rows hash the same as rows
  // explicitly written with zeros.
  std::array<std::uint8_t, 32> digest() const {
    Sha256 h;
    auto u64 = [&](std::uint64_t v) { h.update(&v, sizeof v); };
    u64(static_cast<std::uint64_t>(subs_.size()));
    u64(cfg_.row_size_bytes);
    for (std::size_t s = 0; s < subs_.size(); ++s) {
      const auto& sa = subs_[s];
      for (long r = 0; r < cfg_.rows_per_subarray; ++r) {
        const bool nonzero =
            !sa.rows[r].empty() &&
            std::any_of(sa.rows[r].begin(), sa.rows[r].end(),
                        [](std::uint8_t b) { return b != 0; });
        if (!nonzero && sa.row_valid[r]) continue;
        u64(s);
        u64(static_cast<std::uint64_t>(r));
        u64(sa.row_valid[r] ? 1 : 0);
        if (nonzero) h.update(sa.rows[r].data(), sa.rows[r].size());
      }
      if (sa.buffer_valid) {
        u64(s);
        u64(0xb0ffu);
        h.update(sa.row_buffer.data(), sa.row_buffer.size());
      }
    }
    return h.finish();
  }

 private:
  // tFAW window: at most 4 activate events per rank in any tFAW interval.
  Ps rank_ready(int rank) const {
    const auto& w = windows_[rank];
    if (cfg_.tFAW == 0 || w.size() < 4) return std::numeric_limits<Ps>::min() / 4;
    return w[w.size() - 4] + cfg_.tFAW;
  }
  void push_act(int rank, Ps t) {
    auto& w = windows_[rank];
    w.push_back(t);
    if (w.size() > 4) w.pop_front();
    ++acts_;
  }

  // Issue a command's activate train starting no earlier than now_; returns
  // the time of the last activate.  Updates the subarray's tRC bookkeeping.
  Ps issue_acts(int sub_i, const CmdAtoms& a) {
    auto& s = subs_[sub_i];
    const int rank = cfg_.rank_of(sub_i);
    Ps t = std::max(now_, s.last_act + cfg_.tRC);
    for (int i = 0; i < a.n_acts; ++i) {
      t = std::max(t, rank_ready(rank));
      push_act(rank, t);
      s.last_act = t;
      if (i + 1 < a.n_acts) t += a.act_gap;
    }
    return s.last_act;
  }

  void check_row(int sub_i, long row) const {
    if (row < 0 || row >= cfg_.rows_per_subarray)
      throw SimError(Err::InvalidRow, "row " + std::to_string(row) + " out of range");
  }
  void check_valid(int sub_i, long row) const {
    if (!subs_[sub_i].row_valid[row])
      throw SimError(Err::InvalidRow,
                     "row " + std::to_string(row) + " of subarray " +
                         std::to_string(sub_i) + " was destroyed");
  }

  void do_act(const Command& c) {
    auto& s = subs_.at(c.sub);
    check_row(c.sub, c.row);
    if (!s.precharged())
      throw SimError(Err::ActivateWhileOpen,
                     "subarray " + std::to_string(c.sub) + " already open");
    check_valid(c.sub, c.row);
    const auto a = atoms_for(c, cfg_);
    const Ps last = issue_acts(c.sub, a);
    s.row_buffer = row_view(c.sub, c.row);
    s.buffer_valid = true;
    s.activated_row = c.row;
    s.open_since = last;
    now_ = last + a.tail;
    energy_ += cfg_.eACT;
  }

  void do_pre(const Command& c) {
    auto& s = subs_.at(c.sub);
    Ps issue = now_;
    if (!s.precharged()) {
      issue = std::max(issue, s.open_since + cfg_.tRAS);
      s.activated_row.reset();
    }
    now_ = issue + cfg_.tRP;
    energy_ += cfg_.ePRE;
  }

  void do_rd(const Command& c) {
    auto& s = subs_.at(c.sub);
    check_row(c.sub, c.row);
    if (!s.activated_row || *s.activated_row != c.row)
      throw SimError(Err::BufferClosed, "RD with row " + std::to_string(c.row) +
                                            " not open");
    now_ += cfg_.tCK;
  }

  void do_wr(const Command& c) {
    auto& s = subs_.at(c.sub);
    check_row(c.sub, c.row);
    if (c.payload) {
      // host write: activate-write-precharge envelope
      if (!s.precharged())
        throw SimError(Err::ActivateWhileOpen, "WR to open subarray");
      if (c.payload->size() != cfg_.row_size_bytes)
        throw SimError(Err::WidthMismatch, "WR payload size != row size");
      const auto a = atoms_for(c, cfg_);
      const Ps last = issue_acts(c.sub, a);
      row_ref(c.sub, c.row) = *c.payload;
      s.row_valid[c.row] = true;
      s.row_buffer = *c.payload;
      s.buffer_valid = true;
      now_ = last + a.tail;
      energy_ += cfg_.eACT + cfg_.ePRE;
    } else {
      // write-back of the row buffer
      if (!s.buffer_valid) throw SimError(Err::BufferClosed, "WR from empty buffer");
      row_ref(c.sub, c.row) = s.row_buffer;
      s.row_valid[c.row] = true;
      now_ += cfg_.tCK;
    }
  }

  void do_aap(const Command& c) {
    auto& s = subs_.at(c.sub);
    check_row(c.sub, c.row);
    check_row(c.sub, c.row2);
    if (!s.precharged()) throw SimError(Err::ActivateWhileOpen, "AAP to open subarray");
    check_valid(c.sub, c.row);
    const auto a = atoms_for(c, cfg_);
    const Ps last = issue_acts(c.sub, a);
    Row data = row_view(c.sub, c.row);
    if (c.flag)
      for (auto& b : data) b = static_cast<std::uint8_t>(~b);
    row_ref(c.sub, c.row2) = data;
    s.row_valid[c.row2] = true;
    s.row_buffer = std::move(data);
    s.buffer_valid = true;
    now_ = last + a.tail;
    energy_ += 2 * cfg_.eACT + cfg_.ePRE;
  }

  void do_rbm(const Command& c) {
    auto& src = subs_.at(c.sub);
    auto& dst = subs_.at(c.sub2);
    if (!src.buffer_valid)
      throw SimError(Err::BufferClosed, "RBM from subarray " +
                                            std::to_string(c.sub) +
                                            " with empty row buffer");
    dst.row_buffer = src.row_buffer;
    dst.buffer_valid = true;
    now_ += cfg_.tRBM;
    energy_ += cfg_.eRBM;
  }

  void do_tra(const Command& c) {
    auto& s = subs_.at(c.sub);
    if (c.row == c.row2 || c.row == c.row3 || c.row2 == c.row3)
      throw SimError(Err::RowsNotDistinct, "TRA rows must be distinct");
    check_row(c.sub, c.row);
    check_row(c.sub, c.row2);
    check_row(c.sub, c.row3);
    if (!s.precharged()) throw SimError(Err::ActivateWhileOpen, "TRA to open subarray");
    check_valid(c.sub, c.row);
    check_valid(c.sub, c.row2);
    check_valid(c.sub, c.row3);
    const auto a = atoms_for(c, cfg_);
    const Ps last = issue_acts(c.sub, a);
    const Row& ra = row_view(c.sub, c.row);
    const Row& rb = row_view(c.sub, c.row2);
    const Row& rc = row_view(c.sub, c.row3);
    Row out(cfg_.row_size_bytes);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<std::uint8_t>((ra[i] & rb[i]) | (ra[i] & rc[i]) |
                                         (rb[i] & rc[i]));
    row_ref(c.sub, c.row) = out;
    row_ref(c.sub, c.row2) = out;
    row_ref(c.sub, c.row3) = out;
    s.row_buffer = std::move(out);
    s.buffer_valid = true;
    now_ = last + a.tail;
    energy_ += 3 * cfg_.eACT + cfg_.ePRE;
  }

  void do_shift(const Command& c) {
    auto& s = subs_.at(c.sub);
    check_row(c.sub, c.row);
    if (c.count != 1 && c.count != 8)
      throw SimError(Err::UnsupportedAmount,
                     "shift amount must be 1 or 8, got " + std::to_string(c.count));
    if (c.width <= 0 || !is_pow2(static_cast<std::uint64_t>(c.width)) ||
        static_cast<std::size_t>(c.width) > cfg_.row_size_bytes * 8)
      throw SimError(Err::WidthMismatch, "bad shift lane width");
    if (!s.precharged()) throw SimError(Err::ActivateWhileOpen, "SHIFT to open subarray");
    check_valid(c.sub, c.row);
    const auto a = atoms_for(c, cfg_);
    const Ps last = issue_acts(c.sub, a);
    Row& r = row_ref(c.sub, c.row);
    shift_lanes(r, c.width, static_cast<int>(c.count), c.flag);
    s.row_buffer = r;
    s.buffer_valid = true;
    now_ = last + a.tail;
    energy_ += 2 * cfg_.eACT + cfg_.ePRE;
  }

  void do_sweep(const Command& c) {
    auto& s = subs_.at(c.sub);
    const auto& src = subs_.at(c.sub2);
    if (c.count < 1 || c.row < 0 || c.row + c.count > cfg_.rows_per_subarray)
      throw SimError(Err::SweepOutOfRange,
                     "sweep [" + std::to_string(c.row) + ", +" +
                         std::to_string(c.count) + ") exceeds subarray");
    if (c.width <= 0 || c.width > 64 ||
        !is_pow2(static_cast<std::uint64_t>(c.width)) ||
        (cfg_.row_size_bytes * 8) % c.width != 0)
      throw SimError(Err::WidthMismatch,
                     "bad sweep lane width " + std::to_string(c.width));
    if (!c.keys.empty() && static_cast<long>(c.keys.size()) != c.count)
      throw SimError(Err::WidthMismatch, "sweep key list size != row count");
    if (!s.precharged())
      throw SimError(Err::ActivateWhileOpen, "sweep on open subarray");
    if (!src.buffer_valid)
      throw SimError(Err::BufferClosed, "sweep with empty source row buffer");
    for (long i = 0; i < c.count; ++i) {
      if (!s.row_valid[c.row + i])
        throw SimError(cfg_.variant == Variant::GSA ? Err::GSAInvalidLUT
                                                    : Err::InvalidRow,
                       "sweep over destroyed row " + std::to_string(c.row + i));
    }

    const std::uint64_t width_mask =
        c.width >= 64 ? ~0ull : (std::uint64_t(1) << c.width) - 1;
    std::unordered_map<std::uint64_t, long> key_to_idx;
    key_to_idx.reserve(static_cast<std::size_t>(c.count) * 2);
    for (long i = 0; i < c.count; ++i) {
      const std::uint64_t key =
          (c.keys.empty() ? (c.offset + static_cast<std::uint64_t>(i) * c.stride)
                          : c.keys[i]) &
          c.mask & width_mask;
      if (!key_to_idx.emplace(key, i).second)
        throw SimError(Err::OverlappingClasses,
                       "two swept rows share masked comparand key");
    }

    SweepResult res;
    res.rows_swept = c.count;
    res.destination.assign(cfg_.row_size_bytes, 0);
    const std::size_t nlanes = lane_count(cfg_.row_size_bytes, c.width);
    res.matched_lane_bitmap.assign(nlanes, false);
    std::vector<bool> row_matched(static_cast<std::size_t>(c.count), false);
    for (std::size_t l = 0; l < nlanes; ++l) {
      const std::uint64_t v = get_lane(src.row_buffer, c.width, l);
      const auto it = key_to_idx.find(v & c.mask & width_mask);
      if (it == key_to_idx.end()) continue;
      const long idx = it->second;
      const Row& lut_row = row_view(c.sub, c.row + idx);
      set_lane(res.destination, c.width, l, get_lane(lut_row, c.width, l));
      res.matched_lane_bitmap[l] = true;
      row_matched[static_cast<std::size_t>(idx)] = true;
    }
    res.matched_rows =
        static_cast<long>(std::count(row_matched.begin(), row_matched.end(), true));

    const auto a = atoms_for(c, cfg_);
    const Ps start = now_;
    const Ps last = issue_acts(c.sub, a);
    now_ = last + a.tail;
    res.elapsed = now_ - start;

    Fj e = c.count * (cfg_.eACT + cfg_.eCMP);
    if (cfg_.variant == Variant::BSA) {
      e += res.matched_rows * cfg_.eFF;
      e += c.count * cfg_.ePRE;
    } else {
      e += cfg_.ePRE;
    }
    energy_ += e;
    res.energy = e;

    if (cfg_.variant == Variant::GSA) {
      for (long i = 0; i < c.count; ++i) {
        s.row_valid[c.row + i] = false;
        res.rows_invalidated.push_back(c.row + i);
      }
    }

    s.row_buffer = res.destination;
    s.buffer_valid = true;
    if (cfg_.variant == Variant::BSA) s.ff_buffer = res.destination;
    s.activated_row.reset();
    last_sweep_ = std::move(res);
  }

  DeviceConfig cfg_;
  std::vector<Subarray> subs_;
  std::vector<std::deque<Ps>> windows_;  // per-rank activate timestamps
  Row zero_row_;
  Ps now_ = 0;
  Fj energy_ = 0;
  std::uint64_t acts_ = 0;
  std::map<CmdKind, std::uint64_t> hist_;
  ProgramTrace* sink_ = nullptr;
  bool in_parallel_ = false;
  SweepResult last_sweep_;
};

// ---- row-level convenience ops (module-level read/write) -------------------

inline void write_row(Simulator& sim, int sub, long row, const Row& data) {
  if (!sim.sub(sub).precharged()) sim.exec(Command::pre(sub));
  sim.exec(Command::wr(sub, row, data));
}

inline Row read_row(Simulator& sim, int sub, long row) {
  auto& s = sim.sub(sub);
  if (s.activated_row && *s.activated_row == row) {
    sim.exec(Command::rd(sub, row));
    return s.row_buffer;
  }
  if (!s.precharged()) sim.exec(Command::pre(sub));
  sim.exec(Command::act(sub, row));
  sim.exec(Command::rd(sub, row));
  Row out = s.row_buffer;
  sim.exec(Command::pre(sub));
  return out;
}

}  // namespace pluto
