#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pluto/engine.hpp"
#include "pluto/workloads.hpp"

namespace fs = std::filesystem;
using namespace pluto;

namespace {

constexpr const char* kCsvHeader =
    "workload,variant,profile,parallel_subarrays,tfaw_ns,elapsed_ns,energy_pJ,"
    "activations,bandwidth_GBps";

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string csv_row(const WorkloadSpec& spec, const DeviceConfig& cfg,
                    const RunMetrics& m, std::size_t bytes_processed) {
  const double bw = m.elapsed > 0
                        ? static_cast<double>(bytes_processed) / ps_to_ns(m.elapsed)
                        : 0.0;
  std::ostringstream os;
  os << spec.name << ',' << variant_name(cfg.variant) << ',' << cfg.profile_name
     << ',' << cfg.parallel_subarrays << ',' << fmt(ps_to_ns(cfg.tFAW)) << ','
     << fmt(m.elapsed_ns()) << ',' << fmt(m.energy_pJ()) << ',' << m.activations
     << ',' << fmt(bw, 6);
  return os.str();
}

void write_manifest(const fs::path& dir, int argc, char** argv) {
  std::ofstream os(dir / "MANIFEST");
  for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
  os << '\n';
}

std::vector<std::uint8_t> load_input(const WorkloadSpec& spec) {
  if (!spec.input_file.empty()) {
    std::ifstream is(spec.input_file, std::ios::binary);
    if (!is) throw SimError(Err::ParseError, "cannot open input file " + spec.input_file);
    std::vector<std::uint8_t> v((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());
    return v;
  }
  return make_input(spec);
}

void apply_seed_env(WorkloadSpec& spec) {
  if (const char* s = std::getenv("PLUTO_SIM_SEED")) spec.seed = std::stoull(s);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(tok.substr(b, e - b + 1));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& workload_path,
            const std::string& out_dir, bool emit_trace, int argc, char** argv) {
  DeviceConfig cfg = load_device_config_file(config_path);
  std::ifstream wf(workload_path);
  if (!wf) throw SimError(Err::ParseError, "cannot open workload file " + workload_path);
  WorkloadSpec spec = load_workload_spec(wf, workload_path);
  apply_seed_env(spec);
  const auto input = load_input(spec);

  fs::create_directories(out_dir);
  ProgramTrace trace;
  Machine m(cfg, emit_trace ? &trace : nullptr);
  const auto result = run_workload(m, spec, input);

  {
    std::ofstream os(fs::path(out_dir) / "metrics.csv");
    os << kCsvHeader << '\n'
       << csv_row(spec, cfg, result.metrics, input.size()) << '\n';
  }
  {
    std::ofstream os(fs::path(out_dir) / "output.bin", std::ios::binary);
    os.write(reinterpret_cast<const char*>(result.output.data()),
             static_cast<std::streamsize>(result.output.size()));
  }
  {
    const auto full = m.sim().metrics_snapshot();
    std::ofstream os(fs::path(out_dir) / "summary.txt");
    os << "elapsed_ns " << detail::ps_to_ns_str(full.elapsed) << '\n'
       << "energy_pJ " << fmt(full.energy_pJ()) << '\n'
       << "activations " << full.activations << '\n'
       << "digest " << Sha256::hex(m.sim().digest()) << '\n';
  }
  if (emit_trace) {
    std::ofstream os(fs::path(out_dir) / "trace.txt");
    write_trace(os, trace);
  }
  write_manifest(out_dir, argc, argv);
  return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& config_path) {
  DeviceConfig cfg = load_device_config_file(config_path);
  std::ifstream is(trace_path);
  if (!is) throw SimError(Err::ParseError, "cannot open trace file " + trace_path);
  const auto trace = read_trace(is);
  const auto r = replay_trace(cfg, trace);
  std::cout << "elapsed_ns " << detail::ps_to_ns_str(r.metrics.elapsed) << '\n'
            << "energy_pJ " << fmt(r.metrics.energy_pJ()) << '\n'
            << "activations " << r.metrics.activations << '\n'
            << "digest " << r.state_digest << '\n';
  return 0;
}

struct MatrixCell {
  std::string profile_name;
  Variant variant;
  int parallel;
  int tfaw_percent;
  WorkloadSpec spec;
};

int cmd_sweep(const std::string& matrix_path, const std::string& out_dir,
              int jobs, int argc, char** argv) {
  std::ifstream mf(matrix_path);
  if (!mf) throw SimError(Err::ParseError, "cannot open matrix file " + matrix_path);
  auto kv = parse_kv(mf, matrix_path);
  auto get = [&](const std::string& k, const std::string& dflt) {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  };
  const auto profiles = split_csv(get("profiles", "desk"));
  const auto variants = split_csv(get("variants", "BSA"));
  const auto parallels = split_csv(get("parallel", "1"));
  const auto tfaws = split_csv(get("tfaw_percent", "100"));
  const auto workloads = split_csv(get("workloads", "bitcount"));
  WorkloadSpec base;
  base.input_bytes = std::stoull(get("input_bytes", "65536"));
  base.seed = std::stoull(get("seed", "1"));
  base.packet_bytes = std::stoi(get("packet_bytes", "128"));
  apply_seed_env(base);

  std::vector<MatrixCell> cells;
  for (const auto& pr : profiles)
    for (const auto& va : variants)
      for (const auto& pa : parallels)
        for (const auto& tf : tfaws)
          for (const auto& wl : workloads) {
            MatrixCell c;
            c.profile_name = pr;
            c.variant = variant_from_string(va);
            c.parallel = std::stoi(pa);
            c.tfaw_percent = std::stoi(tf);
            c.spec = base;
            c.spec.name = wl;
            cells.push_back(std::move(c));
          }

  auto run_cell = [&](const MatrixCell& c) {
    DeviceConfig cfg = profile(c.profile_name);
    cfg.variant = c.variant;
    cfg.parallel_subarrays = c.parallel;
    cfg.tFAW = cfg.tFAW * c.tfaw_percent / 100;
    Machine m(cfg);
    const auto input = load_input(c.spec);
    const auto res = run_workload(m, c.spec, input);
    return std::make_pair(cfg, res.metrics);
  };

  std::vector<std::pair<DeviceConfig, RunMetrics>> results(cells.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(cells[i]);
  } else {
    std::vector<std::future<std::pair<DeviceConfig, RunMetrics>>> futs(cells.size());
    std::size_t next = 0;
    while (next < cells.size()) {
      const std::size_t batch =
          std::min<std::size_t>(jobs, cells.size() - next);
      for (std::size_t k = 0; k < batch; ++k)
        futs[next + k] = std::async(std::launch::async, run_cell,
                                    std::cref(cells[next + k]));
      for (std::size_t k = 0; k < batch; ++k)
        results[next + k] = futs[next + k].get();
      next += batch;
    }
  }

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "metrics.csv");
    os << kCsvHeader << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i)
      os << csv_row(cells[i].spec, results[i].first, results[i].second,
                    cells[i].spec.input_bytes)
         << '\n';
  }
  {
    // geometric mean of elapsed over the workload set per remaining axes
    std::ofstream os(fs::path(out_dir) / "geomean.csv");
    os << "profile,variant,parallel_subarrays,tfaw_percent,geomean_elapsed_ns\n";
    for (const auto& pr : profiles)
      for (const auto& va : variants)
        for (const auto& pa : parallels)
          for (const auto& tf : tfaws) {
            double log_sum = 0;
            int n = 0;
            for (std::size_t i = 0; i < cells.size(); ++i) {
              const auto& c = cells[i];
              if (c.profile_name != pr || variant_name(c.variant) != va ||
                  std::to_string(c.parallel) != pa ||
                  std::to_string(c.tfaw_percent) != tf)
                continue;
              log_sum += std::log(results[i].second.elapsed_ns());
              ++n;
            }
            if (n == 0) continue;
            os << pr << ',' << va << ',' << pa << ',' << tf << ','
               << fmt(std::exp(log_sum / n)) << '\n';
          }
  }
  {
    // peak internal bandwidth per variant and capacity
    std::ofstream os(fs::path(out_dir) / "bandwidth.csv");
    os << "capacity_GB,variant,bandwidth_GBps\n";
    DeviceConfig cfg = profile(profiles.front());
    for (double gb : {4.0, 16.0, 64.0})
      for (Variant v : {Variant::GSA, Variant::BSA, Variant::GMC})
        os << fmt(gb, 0) << ',' << variant_name(v) << ','
           << fmt(max_bandwidth_GBps(cfg, v, gb * 1024 * 1024 * 1024), 3) << '\n';
  }
  write_manifest(out_dir, argc, argv);
  return 0;
}

std::uint64_t lut_fn(const std::string& kind, int cut, std::uint64_t k) {
  if (kind == "popcount") return static_cast<std::uint64_t>(__builtin_popcountll(k));
  if (kind == "identity") return k;
  if (kind == "square") return k * k;
  if (kind == "increment") return k + 1;
  if (kind == "nibble_add") return (k >> 4) + (k & 0xF);
  if (kind == "color_curve") return (k * k + 127) / 255;
  if (kind == "threshold") return k >= static_cast<std::uint64_t>(cut) ? 0xFF : 0;
  if (kind == "crc8") return crc8_step(0, static_cast<std::uint8_t>(k));
  throw SimError(Err::ParseError, "unknown LUT kind '" + kind + "'");
}

int cmd_lut_build(const std::string& kind, int width, long entries, int cut,
                  const std::string& out_path) {
  const auto prog = build_lut(width, static_cast<std::size_t>(entries),
                              [&](std::uint64_t k) { return lut_fn(kind, cut, k); });
  save_lut_path(out_path, prog);
  std::cout << "wrote " << out_path << " (" << prog.entries.size()
            << " entries, width " << prog.width << ")\n";
  return 0;
}

int cmd_lut_inspect(const std::string& in_path) {
  inspect_lut(std::cout, load_lut_path(in_path));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pLUTo in-DRAM lookup-table compute simulator"};
  app.require_subcommand(1);

  std::string config_path, workload_path, out_dir, matrix_path, trace_path;
  std::string lut_kind = "popcount", lut_in, lut_out;
  int lut_width = 8, lut_cut = 128, jobs = 1;
  long lut_entries = 256;
  bool emit_trace = false;

  auto* run = app.add_subcommand("run", "run one workload");
  run->add_option("--config", config_path, "device config file")->required();
  run->add_option("--workload", workload_path, "workload config file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--emit-trace", emit_trace, "write the command trace");

  auto* sweep = app.add_subcommand("sweep", "run an experiment matrix");
  sweep->add_option("--matrix", matrix_path, "matrix config file")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--jobs", jobs, "parallel matrix cells");

  auto* lut = app.add_subcommand("lut", "build or inspect LUT containers");
  lut->require_subcommand(1);
  auto* lb = lut->add_subcommand("build", "build a LUT container");
  lb->add_option("--kind", lut_kind, "table function");
  lb->add_option("--width", lut_width, "lane width in bits");
  lb->add_option("--entries", lut_entries, "entry count");
  lb->add_option("--cut", lut_cut, "threshold cut point");
  lb->add_option("--out", lut_out, "output file")->required();
  auto* li = lut->add_subcommand("inspect", "print a LUT container");
  li->add_option("--in", lut_in, "input file")->required();

  auto* replay = app.add_subcommand("replay", "re-execute a trace");
  replay->add_option("--trace", trace_path, "trace file")->required();
  replay->add_option("--config", config_path, "device config file")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return cmd_run(config_path, workload_path, out_dir, emit_trace, argc, argv);
    if (sweep->parsed()) return cmd_sweep(matrix_path, out_dir, jobs, argc, argv);
    if (lut->parsed()) {
      if (lb->parsed())
        return cmd_lut_build(lut_kind, lut_width, lut_entries, lut_cut, lut_out);
      return cmd_lut_inspect(lut_in);
    }
    if (replay->parsed()) return cmd_replay(trace_path, config_path);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool input_err = e.code() == Err::ParseError ||
                           e.code() == Err::RangeOverflow ||
                           e.code() == Err::DomainTooLarge ||
                           e.code() == Err::Unsupported;
    return input_err ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
