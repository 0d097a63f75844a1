// simulate: run a scenario matrix and write one CSV row per run.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "cachedos/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;
constexpr int kExitIo = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace cachedos;

  CLI::App app{"Quad-core memory hierarchy simulator"};
  std::string config_path;
  std::string out_path;
  std::optional<unsigned> attackers;
  std::optional<unsigned> wb_size;
  std::string prefetch;
  std::string partition;
  std::string regulate;
  std::optional<std::uint64_t> seed;

  app.add_option("--config", config_path, "Scenario file")->required();
  app.add_option("--attackers", attackers, "Number of attacker cores (0-3)");
  app.add_option("--wb-size", wb_size, "L2 writeback buffer entries");
  app.add_option("--prefetch", prefetch, "Enabled prefetchers: l1d,l2 | l1d | l2 | none");
  app.add_option("--partition", partition, "L2 way partitioning")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--regulate", regulate, "READ_MBPS/WRITE_MBPS, either side may be 'none'; or 'none'");
  app.add_option("--seed", seed, "Seed recorded with the results");
  app.add_option("--out", out_path, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  ScenarioConfig cfg;
  Overrides ov;
  try {
    cfg = load_config(config_path);
    ov.attackers = attackers;
    ov.wb_size = wb_size;
    ov.seed = seed;
    if (!prefetch.empty()) ov.prefetch = PrefetchSel::parse(prefetch);
    if (!partition.empty()) ov.partition = partition == "on";
    if (!regulate.empty()) ov.regulate = RegulateSel::parse(regulate);
    if (ov.attackers && *ov.attackers >= cfg.platform.cores) {
      throw ConfigError("--attackers must be below the core count");
    }
    if (ov.wb_size && *ov.wb_size == 0) throw ConfigError("--wb-size must be positive");
    // Fail before a long run rather than after it.
    if (!out_path.empty()) {
      const auto dir = std::filesystem::absolute(out_path).parent_path();
      if (!std::filesystem::is_directory(dir)) throw IoError("output directory '" + dir.string() + "' does not exist");
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  for (const std::string& n : cfg.notes) std::cerr << "note: " << n << '\n';
  if (const auto& v = cfg.workloads[0]) {
    const auto cls = classify_working_set(v->working_set_bytes, cfg.platform.l1d.geometry.size_bytes,
                                          cfg.platform.l2.geometry.size_bytes);
    if (cls == WorkingSetClass::Unclassified) {
      std::cerr << "warning: victim working set " << v->working_set_bytes << " B is neither LLC-fit nor DRAM-sized\n";
    }
  }

  std::vector<RunMetrics> rows;
  try {
    rows = run_matrix(cfg, ov, [](const std::string& line) { std::cerr << line << '\n'; });
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (out_path.empty()) {
      write_csv(std::cout, rows);
    } else {
      emit_csv(rows, out_path);
      std::cerr << "wrote " << rows.size() << " rows to " << out_path << '\n';
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }

  for (const RunMetrics& m : rows) {
    if (m.status != RunStatus::Completed) return kExitRun;
  }
  return kExitOk;
}
