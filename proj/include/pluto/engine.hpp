#pragma once

#include <array>
#include <vector>

#include "pluto/dram.hpp"
#include "pluto/lut.hpp"
#include "pluto/pluto.hpp"
#include "pluto/pum.hpp"

namespace pluto {

// ---- peak internal bandwidth model -----------------------------------------
//
// Per-subarray sweep rate from the timing parameters, scaled by the subarray
// count at the given capacity and anchored to the GSA figure at 16 GB.  BSA
// streams at one row per tRAS+tRP; the gated designs pace at tRC, with GSA
// halved (the table must be rewritten after every use) and GMC doubled
// (activations chain with no restore).
inline double max_bandwidth_GBps(const DeviceConfig& cfg, Variant v,
                                 double capacity_bytes) {
  const double row = static_cast<double>(cfg.row_size_bytes);
  const double n = static_cast<double>(cfg.rows_per_subarray);
  const double gated = row / (n * ps_to_ns(cfg.tRC));  // bytes/ns == GB/s
  double raw;
  switch (v) {
    case Variant::BSA: raw = row / (n * ps_to_ns(cfg.tRAS + cfg.tRP)); break;
    case Variant::GSA: raw = gated / 2.0; break;
    case Variant::GMC: raw = gated * 2.0; break;
    default: raw = gated; break;
  }
  const double sub_bytes = static_cast<double>(cfg.subarray_bytes());
  const double subs_16gb = 16.0 * 1024.0 * 1024.0 * 1024.0 / sub_bytes;
  const double raw_gsa = gated / 2.0;
  const double scale = cfg.bw_anchor_gsa_16gb / (raw_gsa * subs_16gb);
  return raw * scale * (capacity_bytes / sub_bytes);
}

// ---- machine facade --------------------------------------------------------
//
// Carves the device into `parallel_subarrays` groups of two subarrays each: a
// data subarray (inputs, scratch, bulk-logic constants) and a table subarray.
// Tables are loaded through commands once and replicated into the other
// groups by direct state copy, so table setup cost does not scale with the
// parallelism degree.

class Machine {
 public:
  static constexpr int kScratchRows = 18;

  explicit Machine(DeviceConfig cfg, ProgramTrace* sink = nullptr)
      : sim_(std::move(cfg)) {
    sim_.record_to(sink);
    const auto& c = sim_.config();
    groups_ = c.parallel_subarrays;
    if (2 * groups_ > c.total_subarrays())
      throw SimError(Err::CapacityExceeded,
                     "need two subarrays per group, device too small");
    if (c.rows_per_subarray < kScratchRows + 4)
      throw SimError(Err::CapacityExceeded, "subarray too short for scratch rows");
    units_.reserve(groups_);
    const long top = c.rows_per_subarray;
    Row ones(c.row_size_bytes, 0xFF);
    for (int g = 0; g < groups_; ++g) {
      AmbitUnit u;
      u.sim = &sim_;
      u.sub = data_sub(g);
      u.one_row = top - 1;
      u.zero_row = top - 2;
      for (long r = top - 2 - kScratchRows; r < top - 2; ++r) u.scratch.push_back(r);
      if (g == 0) {
        write_row(sim_, u.sub, u.one_row, ones);
      } else {
        sim_.row_ref(u.sub, u.one_row) = ones;
      }
      units_.push_back(std::move(u));
    }
  }

  Simulator& sim() { return sim_; }
  const DeviceConfig& cfg() const { return sim_.config(); }
  int groups() const { return groups_; }
  int data_sub(int g) const { return 2 * g; }
  int lut_sub(int g) const { return 2 * g + 1; }
  AmbitUnit& unit(int g) { return units_.at(g); }
  long user_rows() const {
    return sim_.config().rows_per_subarray - 2 - kScratchRows;
  }

  // Loads `p` at the same rows of every group's table subarray; only the
  // first copy goes through commands.
  int add_table(const LutProgram& p) {
    const long first = lut_next_;
    std::vector<LoadedLut> per_group;
    per_group.reserve(groups_);
    for (int g = 0; g < groups_; ++g) {
      if (g == 0) {
        per_group.push_back(load_lut(sim_, lut_sub(0), first, p));
      } else {
        LoadedLut lut = per_group[0];
        lut.sub = lut_sub(g);
        for (long i = 0; i < lut.n; ++i)
          sim_.row_ref(lut.sub, first + i) = sim_.row_view(lut_sub(0), first + i);
        per_group.push_back(std::move(lut));
      }
    }
    lut_next_ = first + static_cast<long>(p.entries.size());
    tables_.push_back(std::move(per_group));
    return static_cast<int>(tables_.size()) - 1;
  }

  const LoadedLut& table(int id, int g) const { return tables_.at(id).at(g); }

  void write_data(int g, long row, const Row& data) {
    write_row(sim_, data_sub(g), row, data);
  }
  Row read_data(int g, long row) { return read_row(sim_, data_sub(g), row); }
  const Row& peek(int g, long row) const { return sim_.row_view(data_sub(g), row); }

  // One lookup: source row -> table -> result written back to dst_row of the
  // group's data subarray.  Under GSA the table is destroyed by the sweep and
  // reloaded afterwards so the next query finds it live.
  void query(int g, int table_id, long src_row, long dst_row,
             std::uint64_t offset = 0) {
    const LoadedLut& lut = table(table_id, g);
    pluto_query(sim_, lut, data_sub(g), src_row, data_sub(g), offset);
    sim_.exec(Command::wr_from_buffer(data_sub(g), dst_row));
    if (cfg().variant == Variant::GSA && auto_reload) reload_lut(sim_, lut);
  }

  // Same lookup with query-time match parameters (shared physical rows can
  // serve several logical tables through different masks/key sets).
  void query_masked(int g, int table_id, long src_row, long dst_row,
                    std::uint64_t mask, const std::vector<std::uint64_t>& keys,
                    std::uint64_t offset = 0) {
    LoadedLut lut = table(table_id, g);
    lut.mask = mask;
    lut.keys = keys;
    pluto_query(sim_, lut, data_sub(g), src_row, data_sub(g), offset);
    sim_.exec(Command::wr_from_buffer(data_sub(g), dst_row));
    if (cfg().variant == Variant::GSA && auto_reload) reload_lut(sim_, lut);
  }

  bool auto_reload = true;

 private:
  Simulator sim_;
  int groups_ = 1;
  long lut_next_ = 0;
  std::vector<AmbitUnit> units_;
  std::vector<std::vector<LoadedLut>> tables_;
};

// ---- bulk table op ---------------------------------------------------------
//
// Applies one table to a contiguous run of rows, one query per row.
struct PlutoOp {
  int table_id = 0;
  long src_first = 0;
  long dst_first = 0;
  long n_rows = 1;
};

inline void exec_pluto_op(Machine& m, int g, const PlutoOp& op) {
  for (long i = 0; i < op.n_rows; ++i)
    m.query(g, op.table_id, op.src_first + i, op.dst_first + i);
}

// ---- pipelined chains of table stages --------------------------------------
//
// Runs `stages` tables over `n_rows` input rows.  Functionally each row flows
// through the stages in order; for timing, consecutive rows overlap so the
// whole run drains in (n_rows + stages - 1) slots of the slowest stage.
inline RunMetrics run_pipeline(Machine& m, int g,
                               const std::vector<int>& stages, long src_first,
                               long dst_first, long n_rows, long stage_row) {
  auto& sim = m.sim();
  const auto before = sim.metrics_snapshot();
  Ps max_stage = 0;
  for (long r = 0; r < n_rows; ++r) {
    long cur = src_first + r;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const long dst = (s + 1 == stages.size()) ? dst_first + r : stage_row;
      const Ps t0 = sim.now();
      m.query(g, stages[s], cur, dst);
      max_stage = std::max(max_stage, sim.now() - t0);
      cur = dst;
    }
  }
  const Ps slots = static_cast<Ps>(n_rows) + static_cast<Ps>(stages.size()) - 1;
  sim.set_now(before.elapsed + slots * max_stage);
  auto after = sim.metrics_snapshot();
  auto delta = Simulator::delta(before, after);
  return delta;
}

// ---- trace replay ----------------------------------------------------------

struct ReplayResult {
  RunMetrics metrics;
  std::string state_digest;
};

inline ReplayResult replay_trace(const DeviceConfig& cfg,
                                 const ProgramTrace& trace) {
  Simulator sim(cfg);
  replay_program(sim, trace);
  ReplayResult r;
  r.metrics = sim.metrics_snapshot();
  r.state_digest = Sha256::hex(sim.digest());
  return r;
}

}  // namespace pluto
