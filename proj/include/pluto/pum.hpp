#pragma once

#include <deque>
#include <vector>

#include "pluto/dram.hpp"

namespace pluto {

// Intra-lane shift by an arbitrary amount, composed from the native 8-bit and
// 1-bit shift steps.
inline void drisa_shift(Simulator& sim, int sub, long row, int amount, bool left,
                        int width) {
  if (amount < 0) throw SimError(Err::UnsupportedAmount, "negative shift amount");
  if (!sim.sub(sub).precharged()) sim.exec(Command::pre(sub));
  while (amount >= 8) {
    sim.exec(Command::shift(sub, row, 8, left, width));
    amount -= 8;
  }
  while (amount > 0) {
    sim.exec(Command::shift(sub, row, 1, left, width));
    amount -= 1;
  }
}

// ---- bulk bitwise unit ------------------------------------------------------
//
// Majority-based bulk logic on rows of one subarray.  `zero_row`/`one_row`
// hold the constants 0 and ~0; `scratch` is a pool of free rows consumed as a
// stack by composite ops (AND/OR need 3, XOR needs 4, adders more).

struct AmbitUnit {
  Simulator* sim = nullptr;
  int sub = 0;
  long zero_row = 0;
  long one_row = 0;
  std::vector<long> scratch;

  long take() {
    if (scratch.empty())
      throw SimError(Err::CapacityExceeded, "ambit scratch pool exhausted");
    const long r = scratch.back();
    scratch.pop_back();
    return r;
  }
  void give(long r) { scratch.push_back(r); }

  // in-array ops start from a precharged state; close any row a prior
  // activation (e.g. a query source) left open
  void close() {
    if (!sim->sub(sub).precharged()) sim->exec(Command::pre(sub));
  }

  void copy(long src, long dst) { close(); sim->exec(Command::aap(sub, src, dst)); }
  void not_to(long src, long dst) { close(); sim->exec(Command::aap(sub, src, dst, true)); }
  void maj3(long a, long b, long c) { close(); sim->exec(Command::tra(sub, a, b, c)); }

  // dst = a op b; operands are preserved
  void and_to(long a, long b, long dst) { tra_op(a, b, zero_row, dst); }
  void or_to(long a, long b, long dst) { tra_op(a, b, one_row, dst); }

  void xor_to(long a, long b, long dst) {
    const long t_or = take();
    const long t_and = take();
    or_to(a, b, t_or);
    and_to(a, b, t_and);
    not_to(t_and, t_and);
    and_to(t_or, t_and, dst);
    give(t_and);
    give(t_or);
  }

  void shift(long row, int amount, bool left, int width) {
    drisa_shift(*sim, sub, row, amount, left, width);
  }

 private:
  void tra_op(long a, long b, long ctrl, long dst) {
    const long s0 = take();
    const long s1 = take();
    const long s2 = take();
    copy(a, s0);
    copy(b, s1);
    copy(ctrl, s2);
    maj3(s0, s1, s2);
    copy(s0, dst);
    give(s2);
    give(s1);
    give(s0);
  }

 public:
  // Kogge-Stone parallel-prefix add over fixed-width lanes: dst = a + b
  // (mod 2^width per lane).  Operands are preserved.
  void ksa_add(long a, long b, long dst, int width) {
    if (!is_pow2(static_cast<std::uint64_t>(width)) || width < 2)
      throw SimError(Err::WidthMismatch, "adder lane width must be a power of two >= 2");
    const long p = take();
    const long g = take();
    const long t = take();
    xor_to(a, b, p);
    and_to(a, b, g);
    for (int s = 1; s < width; s <<= 1) {
      copy(g, t);
      shift(t, s, true, width);
      and_to(t, p, t);
      or_to(g, t, g);
      copy(p, t);
      shift(t, s, true, width);
      and_to(p, t, p);
    }
    shift(g, 1, true, width);
    xor_to(a, b, t);
    xor_to(t, g, dst);
    give(t);
    give(g);
    give(p);
  }
};

inline void lisa_rbm(Simulator& sim, int src_sub, int dst_sub) {
  sim.exec(Command::rbm(src_sub, dst_sub));
}

// ---- multi-subarray scheduler ----------------------------------------------
//
// Rolling four-activate window per rank.
struct ActWindow {
  Ps tfaw = 0;
  std::deque<Ps> acts;

  Ps ready() const {
    if (tfaw == 0 || acts.size() < 4) return std::numeric_limits<Ps>::min() / 4;
    return acts[acts.size() - 4] + tfaw;
  }
  void push(Ps t) {
    acts.push_back(t);
    if (acts.size() > 4) acts.pop_front();
  }
};

// Greedy list scheduler for independent command chains (one chain per
// subarray group).  Commands within a chain stay ordered; across chains only
// the shared-resource constraints bind: tRC between activates of one
// subarray and the four-activate window of each rank.  Returns the makespan.
inline Ps schedule_parallel(const DeviceConfig& cfg,
                            const std::vector<std::vector<Command>>& chains) {
  struct SubState {
    Ps last_act = std::numeric_limits<Ps>::min() / 4;
    bool open = false;
    Ps open_since = 0;
  };
  std::vector<SubState> subs(cfg.total_subarrays());
  std::vector<ActWindow> ranks(cfg.ranks * cfg.channels);
  for (auto& r : ranks) r.tfaw = cfg.tFAW;

  // per-chain cursor: current command, activate index inside it, and the
  // earliest time the next atom may go out (act_gap / command-finish chaining)
  std::vector<std::size_t> next(chains.size(), 0);
  std::vector<int> act_idx(chains.size(), 0);
  std::vector<Ps> ready(chains.size(), 0);
  Ps makespan = 0;

  // One activate (or one whole activate-free command) is committed per pick,
  // so concurrent bursts from different subarrays interleave in the shared
  // rank window instead of serializing command-by-command.
  auto next_issue = [&](std::size_t ci) {
    const Command& c = chains[ci][next[ci]];
    const auto a = atoms_for(c, cfg);
    Ps t = ready[ci];
    if (a.n_acts > 0) {
      if (act_idx[ci] == 0) t = std::max(t, subs[c.sub].last_act + cfg.tRC);
      t = std::max(t, ranks[cfg.rank_of(c.sub)].ready());
    } else if (c.kind == CmdKind::PRE && subs[c.sub].open) {
      t = std::max(t, subs[c.sub].open_since + cfg.tRAS);
    }
    return t;
  };

  for (;;) {
    std::size_t best = chains.size();
    Ps best_t = 0;
    for (std::size_t ci = 0; ci < chains.size(); ++ci) {
      if (next[ci] >= chains[ci].size()) continue;
      const Ps t = next_issue(ci);
      if (best == chains.size() || t < best_t) {
        best = ci;
        best_t = t;
      }
    }
    if (best == chains.size()) break;

    const Command& c = chains[best][next[best]];
    const auto a = atoms_for(c, cfg);
    auto& ss = subs[c.sub];
    if (a.n_acts > 0) {
      ranks[cfg.rank_of(c.sub)].push(best_t);
      ss.last_act = best_t;
      if (++act_idx[best] < a.n_acts) {
        ready[best] = best_t + a.act_gap;
        continue;
      }
      const Ps finish = best_t + a.tail;
      if (c.kind == CmdKind::ACT) {
        ss.open = true;
        ss.open_since = best_t;
      } else {
        ss.open = false;
      }
      ready[best] = finish;
      makespan = std::max(makespan, finish);
    } else {
      if (c.kind == CmdKind::PRE) ss.open = false;
      const Ps finish = best_t + a.duration;
      ready[best] = finish;
      makespan = std::max(makespan, finish);
    }
    act_idx[best] = 0;
    ++next[best];
  }
  return makespan;
}

// Runs `fn(group)` for each chain serially on `sim` (chains touch disjoint
// subarrays, so serial functional execution is exact), captures each chain's
// commands, and replaces the serially accumulated elapsed time with the
// scheduled makespan.  Energy and activations are workload properties and are
// unchanged by scheduling.
template <class Fn>
inline Ps run_parallel(Simulator& sim, int n_chains, Fn&& fn) {
  if (sim.in_parallel()) {
    // nested region: run serially under the enclosing schedule
    const Ps start = sim.now();
    for (int g = 0; g < n_chains; ++g) fn(g);
    return sim.now() - start;
  }
  const Ps start = sim.now();
  auto* outer = sim.recording();
  sim.set_in_parallel(true);
  ParBlock blk;
  blk.chains.resize(n_chains);
  for (int g = 0; g < n_chains; ++g) {
    ProgramTrace tmp;
    sim.record_to(&tmp);
    fn(g);
    for (auto& item : tmp)
      blk.chains[g].push_back(std::move(std::get<Command>(item)));
  }
  sim.set_in_parallel(false);
  sim.record_to(outer);
  const Ps span = schedule_parallel(sim.config(), blk.chains);
  sim.set_now(start + span);
  if (outer) outer->emplace_back(std::move(blk));
  return span;
}

// Re-executes a recorded program: serial commands directly, parallel blocks
// functionally in chain order with the block's scheduled span applied —
// exactly what the original run did, so metrics and state come out identical.
inline void replay_program(Simulator& sim, const ProgramTrace& trace) {
  for (const auto& item : trace) {
    if (const auto* c = std::get_if<Command>(&item)) {
      sim.exec(*c);
    } else {
      const auto& blk = std::get<ParBlock>(item);
      const Ps start = sim.now();
      for (const auto& chain : blk.chains)
        for (const auto& cmd : chain) sim.exec(cmd);
      sim.set_now(start + schedule_parallel(sim.config(), blk.chains));
    }
  }
}

}  // namespace pluto
