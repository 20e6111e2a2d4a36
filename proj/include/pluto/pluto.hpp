#pragma once

#include <vector>

#include "pluto/dram.hpp"
#include "pluto/lut.hpp"
#include "pluto/pum.hpp"

namespace pluto {

// A LutProgram placed into consecutive rows of one subarray.
struct LoadedLut {
  int sub = 0;
  long first_row = 0;
  long n = 0;
  int width = 8;
  std::uint64_t mask = 0xFF;
  std::uint64_t stride = 1;
  std::vector<std::uint64_t> keys;
};

// Writes one row per entry, the entry value replicated across every lane.
// Row loads are setup cost: a table is loaded once and queried many times.
inline LoadedLut load_lut(Simulator& sim, int sub, long first_row,
                          const LutProgram& p) {
  const auto& cfg = sim.config();
  if (p.entries.empty()) throw SimError(Err::LUTNotLoaded, "empty table");
  if (first_row < 0 ||
      first_row + static_cast<long>(p.entries.size()) > cfg.rows_per_subarray)
    throw SimError(Err::CapacityExceeded,
                   "table of " + std::to_string(p.entries.size()) +
                       " rows does not fit at row " + std::to_string(first_row));
  const std::size_t nlanes = lane_count(cfg.row_size_bytes, p.width);
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    Row r(cfg.row_size_bytes, 0);
    for (std::size_t l = 0; l < nlanes; ++l) set_lane(r, p.width, l, p.entries[i]);
    write_row(sim, sub, first_row + static_cast<long>(i), r);
  }
  LoadedLut lut;
  lut.sub = sub;
  lut.first_row = first_row;
  lut.n = static_cast<long>(p.entries.size());
  lut.width = p.width;
  lut.mask = p.mask;
  lut.stride = p.stride;
  lut.keys = p.keys;
  return lut;
}

// Re-marks a destroyed table's rows as live after a reload (GSA).  The stored
// bits are still in place functionally; only the validity flag and the reload
// cost matter, so this re-issues the row writes.
inline void reload_lut(Simulator& sim, const LoadedLut& lut) {
  for (long i = 0; i < lut.n; ++i) {
    const long row = lut.first_row + i;
    Row data = sim.row_view(lut.sub, row);
    write_row(sim, lut.sub, row, data);
  }
}

// One table lookup: activate the source row into its row buffer, sweep the
// table rows with per-lane match logic, and move the result row buffer to the
// destination subarray.  The result is left in the destination row buffer;
// writing it back to a row is the caller's (pipeline's) business.
inline const Row& pluto_query(Simulator& sim, const LoadedLut& lut, int src_sub,
                              long src_row, int dst_sub, std::uint64_t offset = 0) {
  auto& src = sim.sub(src_sub);
  if (src_row >= 0) {
    if (!src.precharged()) sim.exec(Command::pre(src_sub));
    sim.exec(Command::act(src_sub, src_row));
  } else if (!src.buffer_valid) {
    throw SimError(Err::BufferClosed, "query source row buffer is empty");
  }
  if (!sim.sub(lut.sub).precharged()) sim.exec(Command::pre(lut.sub));
  sim.exec(Command::row_sweep(lut.sub, lut.first_row, lut.n, lut.width, lut.mask,
                              src_sub, offset, lut.stride, lut.keys));
  sim.exec(Command::rbm(lut.sub, dst_sub));
  return sim.sub(dst_sub).row_buffer;
}

// Query against a table partitioned over 2^S subarrays (R low key bits pick
// the row, the rest pick the chunk).  Each chunk sweep matches only the lanes
// it owns; the partial result buffers are merged with bulk ORs at the merge
// unit's subarray.  The merged row ends up in `dst_row` of `merge.sub`.
// `src_scratch` names three spare rows of the source subarray used by the
// comparand staging commands.
inline Row pluto_query_large(Simulator& sim, const std::vector<LoadedLut>& chunks,
                             int src_sub, long src_row, AmbitUnit& merge,
                             long dst_row, const std::array<long, 3>& src_scratch,
                             bool parallel = true) {
  if (chunks.empty()) throw SimError(Err::LUTNotLoaded, "no table chunks");
  const int R = ilog2(static_cast<std::uint64_t>(chunks[0].n));
  for (const auto& c : chunks)
    if (c.sub == merge.sub || c.sub == src_sub)
      throw SimError(Err::Unsupported, "chunk subarray collides with source/merge");

  // stage per-chunk comparands (high-bit extraction) on the source subarray
  auto& src = sim.sub(src_sub);
  if (!src.precharged()) sim.exec(Command::pre(src_sub));
  sim.exec(Command::aap(src_sub, src_row, src_scratch[0]));
  sim.exec(Command::aap(src_sub, src_row, src_scratch[1]));
  sim.exec(Command::tra(src_sub, src_scratch[0], src_scratch[1], src_scratch[2]));
  sim.exec(Command::tra(src_sub, src_scratch[0], src_scratch[1], src_scratch[2]));

  sim.exec(Command::act(src_sub, src_row));
  auto sweep_chunk = [&](int k) {
    const auto& lut = chunks[k];
    if (!sim.sub(lut.sub).precharged()) sim.exec(Command::pre(lut.sub));
    sim.exec(Command::row_sweep(lut.sub, lut.first_row, lut.n, lut.width, lut.mask,
                                src_sub, static_cast<std::uint64_t>(k) << R,
                                lut.stride, lut.keys));
  };
  if (parallel && chunks.size() > 1) {
    run_parallel(sim, static_cast<int>(chunks.size()), sweep_chunk);
  } else {
    for (int k = 0; k < static_cast<int>(chunks.size()); ++k) sweep_chunk(k);
  }

  // merge the partial buffers
  const long acc = merge.take();
  const long tmp = merge.take();
  auto& dst = *merge.sim;
  lisa_rbm(dst, chunks[0].sub, merge.sub);
  dst.exec(Command::wr_from_buffer(merge.sub, acc));
  for (std::size_t k = 1; k < chunks.size(); ++k) {
    lisa_rbm(dst, chunks[k].sub, merge.sub);
    dst.exec(Command::wr_from_buffer(merge.sub, tmp));
    merge.or_to(acc, tmp, acc);
  }
  merge.copy(acc, dst_row);
  merge.give(tmp);
  merge.give(acc);
  return sim.row_view(merge.sub, dst_row);
}

}  // namespace pluto
