#include "cachedos/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cachedos {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::uint64_t parse_uint(std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  int base = 10;
  std::string_view digits = t;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits.remove_prefix(2);
  }
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != t.size() || t.empty()) throw ConfigError("expected a number, got '" + t + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("expected on/off, got '" + t + "'");
}

WorkloadKind parse_kind(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "bwread") return WorkloadKind::BwRead;
  if (t == "bwwrite") return WorkloadKind::BwWrite;
  throw ConfigError("workload kind must be bwread or bwwrite, got '" + t + "'");
}

unsigned to_unsigned(std::uint64_t v) {
  if (v > 0xFFFFFFFFu) throw ConfigError("value out of range");
  return static_cast<unsigned>(v);
}

struct CoreDraft {
  std::optional<std::string> role;
  std::optional<WorkloadKind> kind;
  std::optional<std::uint64_t> working_set;
  std::optional<std::uint64_t> stride;
  std::optional<std::uint64_t> iterations;
  std::optional<std::uint64_t> warmup;
  std::optional<Addr> base;
  bool any = false;
};

struct Draft {
  ScenarioConfig cfg;
  std::array<CoreDraft, kMaxCores> cores;
  std::optional<double> dram_hit_ns, dram_conflict_ns, dram_bus_ns;
  bool dram_seen = false;
  std::optional<double> period_us;
  std::optional<bool> regulation_enabled;
  std::array<std::optional<std::uint32_t>, kMaxCores> masks;
};

using Setter = std::function<void(Draft&, const std::string&)>;

void add_cache_keys(std::map<std::string, Setter>& m, const std::string& p, CacheConfig PlatformConfig::*cache,
                    PrefetcherConfig PlatformConfig::*pf) {
  m[p + ".size"] = [=](Draft& d, const std::string& v) { (d.cfg.platform.*cache).geometry.size_bytes = parse_size(v); };
  m[p + ".ways"] = [=](Draft& d, const std::string& v) {
    (d.cfg.platform.*cache).geometry.ways = to_unsigned(parse_uint(v));
  };
  m[p + ".hit_latency"] = [=](Draft& d, const std::string& v) {
    (d.cfg.platform.*cache).geometry.hit_latency = parse_uint(v);
  };
  m[p + ".mshrs"] = [=](Draft& d, const std::string& v) { (d.cfg.platform.*cache).mshrs = to_unsigned(parse_uint(v)); };
  m[p + ".wb_size"] = [=](Draft& d, const std::string& v) {
    (d.cfg.platform.*cache).wb_size = to_unsigned(parse_uint(v));
  };
  m[p + ".prefetch.enabled"] = [=](Draft& d, const std::string& v) { (d.cfg.platform.*pf).enabled = parse_bool(v); };
  m[p + ".prefetch.degree"] = [=](Draft& d, const std::string& v) {
    (d.cfg.platform.*pf).degree = to_unsigned(parse_uint(v));
  };
  m[p + ".prefetch.queue_size"] = [=](Draft& d, const std::string& v) {
    (d.cfg.platform.*pf).queue_size = to_unsigned(parse_uint(v));
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["scenario.id"] = [](Draft& d, const std::string& v) { d.cfg.id = v; };
    m["scenario.seed"] = [](Draft& d, const std::string& v) { d.cfg.seed = parse_uint(v); };
    m["scenario.cycle_limit"] = [](Draft& d, const std::string& v) { d.cfg.cycle_limit = parse_uint(v); };

    m["platform.clock_hz"] = [](Draft& d, const std::string& v) { d.cfg.platform.clock_hz = parse_uint(v); };
    m["platform.line_bytes"] = [](Draft& d, const std::string& v) {
      const unsigned lb = to_unsigned(parse_uint(v));
      d.cfg.platform.line_bytes = lb;
      d.cfg.platform.l1d.geometry.line_bytes = lb;
      d.cfg.platform.l2.geometry.line_bytes = lb;
    };
    m["platform.cores"] = [](Draft& d, const std::string& v) { d.cfg.platform.cores = to_unsigned(parse_uint(v)); };
    m["core.iq"] = [](Draft& d, const std::string& v) { d.cfg.platform.core_iq = to_unsigned(parse_uint(v)); };
    m["core.rob"] = [](Draft& d, const std::string& v) { d.cfg.platform.core_rob = to_unsigned(parse_uint(v)); };
    m["core.lsq"] = [](Draft& d, const std::string& v) { d.cfg.platform.core_lsq = to_unsigned(parse_uint(v)); };

    add_cache_keys(m, "l1d", &PlatformConfig::l1d, &PlatformConfig::l1d_prefetch);
    add_cache_keys(m, "l2", &PlatformConfig::l2, &PlatformConfig::l2_prefetch);

    auto dram_uint = [](unsigned DramConfig::*field) {
      return [=](Draft& d, const std::string& v) {
        d.cfg.platform.dram.*field = to_unsigned(parse_uint(v));
        d.dram_seen = true;
      };
    };
    m["dram.read_queue"] = dram_uint(&DramConfig::read_queue_size);
    m["dram.write_queue"] = dram_uint(&DramConfig::write_queue_size);
    m["dram.banks"] = dram_uint(&DramConfig::banks);
    m["dram.lines_per_row"] = dram_uint(&DramConfig::lines_per_row);
    m["dram.write_high"] = dram_uint(&DramConfig::write_high);
    m["dram.write_low"] = dram_uint(&DramConfig::write_low);
    m["dram.t_row_hit_ns"] = [](Draft& d, const std::string& v) {
      d.dram_hit_ns = parse_double(v);
      d.dram_seen = true;
    };
    m["dram.t_row_conflict_ns"] = [](Draft& d, const std::string& v) {
      d.dram_conflict_ns = parse_double(v);
      d.dram_seen = true;
    };
    m["dram.t_bus_ns"] = [](Draft& d, const std::string& v) {
      d.dram_bus_ns = parse_double(v);
      d.dram_seen = true;
    };

    for (unsigned c = 0; c < kMaxCores; ++c) {
      const std::string p = "core" + std::to_string(c);
      m[p + ".role"] = [c](Draft& d, const std::string& v) {
        const std::string r = lower(v);
        if (r != "victim" && r != "attacker" && r != "idle") {
          throw ConfigError("role must be victim, attacker or idle, got '" + r + "'");
        }
        d.cores[c].role = r;
        d.cores[c].any = true;
      };
      m[p + ".kind"] = [c](Draft& d, const std::string& v) {
        d.cores[c].kind = parse_kind(v);
        d.cores[c].any = true;
      };
      m[p + ".working_set"] = [c](Draft& d, const std::string& v) {
        d.cores[c].working_set = parse_size(v);
        d.cores[c].any = true;
      };
      m[p + ".stride"] = [c](Draft& d, const std::string& v) {
        d.cores[c].stride = parse_size(v);
        d.cores[c].any = true;
      };
      m[p + ".iterations"] = [c](Draft& d, const std::string& v) {
        d.cores[c].iterations = parse_uint(v);
        d.cores[c].any = true;
      };
      m[p + ".warmup"] = [c](Draft& d, const std::string& v) {
        d.cores[c].warmup = parse_uint(v);
        d.cores[c].any = true;
      };
      m[p + ".base"] = [c](Draft& d, const std::string& v) {
        d.cores[c].base = parse_uint(v);
        d.cores[c].any = true;
      };
      m["partition.core" + std::to_string(c) + ".mask"] = [c](Draft& d, const std::string& v) {
        d.masks[c] = static_cast<std::uint32_t>(parse_uint(v));
      };
    }

    m["partition.enabled"] = [](Draft& d, const std::string& v) { d.cfg.partition = parse_bool(v); };
    m["regulation.enabled"] = [](Draft& d, const std::string& v) { d.regulation_enabled = parse_bool(v); };
    m["regulation.read_mbps"] = [](Draft& d, const std::string& v) {
      if (!d.cfg.regulate) d.cfg.regulate = RegulateSel{};
      d.cfg.regulate->read_mbps = parse_double(v);
    };
    m["regulation.write_mbps"] = [](Draft& d, const std::string& v) {
      if (!d.cfg.regulate) d.cfg.regulate = RegulateSel{};
      d.cfg.regulate->write_mbps = parse_double(v);
    };
    m["regulation.period_us"] = [](Draft& d, const std::string& v) { d.period_us = parse_double(v); };
    m["regulation.targets"] = [](Draft& d, const std::string& v) {
      const std::string t = lower(v);
      if (t == "attackers") d.cfg.regulation_targets = RegTargets::Attackers;
      else if (t == "victim") d.cfg.regulation_targets = RegTargets::Victim;
      else if (t == "all") d.cfg.regulation_targets = RegTargets::All;
      else throw ConfigError("regulation.targets must be attackers, victim or all");
    };

    m["sweep.attackers"] = [](Draft& d, const std::string& v) {
      d.cfg.sweep_attackers.clear();
      for (const auto& x : split(v, ',')) d.cfg.sweep_attackers.push_back(to_unsigned(parse_uint(x)));
    };
    m["sweep.wb_size"] = [](Draft& d, const std::string& v) {
      d.cfg.sweep_wb_size.clear();
      for (const auto& x : split(v, ',')) d.cfg.sweep_wb_size.push_back(to_unsigned(parse_uint(x)));
    };
    m["sweep.prefetch"] = [](Draft& d, const std::string& v) {
      d.cfg.sweep_prefetch.clear();
      for (const auto& x : split(v, ';')) d.cfg.sweep_prefetch.push_back(PrefetchSel::parse(x));
    };
    m["sweep.partition"] = [](Draft& d, const std::string& v) {
      d.cfg.sweep_partition.clear();
      for (const auto& x : split(v, ',')) d.cfg.sweep_partition.push_back(parse_bool(x));
    };
    m["sweep.regulate"] = [](Draft& d, const std::string& v) {
      d.cfg.sweep_regulate.clear();
      for (const auto& x : split(v, ',')) d.cfg.sweep_regulate.push_back(RegulateSel::parse(x));
    };
    return m;
  }();
  return table;
}

std::string fmt_mbps(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

PrefetchSel PrefetchSel::parse(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "none" || t == "off") return {false, false};
  if (t == "both" || t == "all") return {true, true};
  PrefetchSel s{false, false};
  for (const auto& part : split(t, t.find('+') != std::string::npos ? '+' : ',')) {
    if (part == "l1d") s.l1d = true;
    else if (part == "l2") s.l2 = true;
    else throw ConfigError("prefetch selection must be none, l1d, l2 or l1d,l2; got '" + t + "'");
  }
  return s;
}

std::string PrefetchSel::label() const {
  if (l1d && l2) return "l1d+l2";
  if (l1d) return "l1d";
  if (l2) return "l2";
  return "none";
}

std::optional<RegulateSel> RegulateSel::parse(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "none" || t == "off") return std::nullopt;
  const auto parts = split(t, '/');
  if (parts.size() != 2) throw ConfigError("regulation must be READ_MBPS/WRITE_MBPS, got '" + t + "'");
  RegulateSel r;
  if (parts[0] != "none" && parts[0] != "-") r.read_mbps = parse_double(parts[0]);
  if (parts[1] != "none" && parts[1] != "-") r.write_mbps = parse_double(parts[1]);
  for (const auto& v : {r.read_mbps, r.write_mbps}) {
    if (v && !(*v > 0)) throw ConfigError("regulation budgets must be positive");
  }
  return r;
}

std::string RegulateSel::label() const {
  return (read_mbps ? fmt_mbps(*read_mbps) : "none") + "/" + (write_mbps ? fmt_mbps(*write_mbps) : "none");
}

std::string label(const std::optional<RegulateSel>& r) { return r ? r->label() : "none"; }

std::uint64_t parse_size(std::string_view text) {
  std::string t = lower(trim(text));
  std::uint64_t mult = 1;
  if (t.size() > 1 && t.back() == 'b' && !std::isdigit(static_cast<unsigned char>(t[t.size() - 2]))) t.pop_back();
  if (!t.empty() && t.back() == 'k') {
    mult = 1024;
    t.pop_back();
  } else if (!t.empty() && t.back() == 'm') {
    mult = 1024 * 1024;
    t.pop_back();
  } else if (!t.empty() && t.back() == 'g') {
    mult = 1024ULL * 1024 * 1024;
    t.pop_back();
  }
  return parse_uint(t) * mult;
}

unsigned ScenarioConfig::declared_attackers() const {
  unsigned n = 0;
  for (const auto& w : workloads) {
    if (w && w->role == Role::Attacker) ++n;
  }
  return n;
}

void ScenarioConfig::validate() const {
  platform.validate();
  if (platform.cores < 1) throw ConfigError("at least one core is required");
  unsigned victims = 0;
  for (unsigned c = 0; c < kMaxCores; ++c) {
    const auto& w = workloads[c];
    if (!w) continue;
    if (c >= platform.cores) throw ConfigError("core" + std::to_string(c) + " is beyond platform.cores");
    w->validate();
    if (w->role == Role::Victim) ++victims;
  }
  if (victims != 1) throw ConfigError("exactly one victim is required, found " + std::to_string(victims));
  if (!workloads[0] || workloads[0]->role != Role::Victim) throw ConfigError("the victim must run on core 0");
  if (partition_masks) partition_masks->validate_disjoint(platform.l2.geometry.ways);
  for (unsigned a : sweep_attackers) {
    if (a >= platform.cores) throw ConfigError("attacker count " + std::to_string(a) + " needs more cores");
  }
  for (unsigned wb : sweep_wb_size) {
    if (wb == 0) throw ConfigError("writeback buffer sizes must be positive");
  }
  if (regulation_period == 0) throw ConfigError("regulation period must be positive");
}

ScenarioConfig parse_config(std::string_view text, const std::string& origin) {
  Draft d;
  std::istringstream in{std::string(text)};
  std::string raw;
  unsigned lineno = 0;
  std::map<std::string, unsigned> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    }
    seen[key] = lineno;
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    try {
      it->second(d, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }

  ScenarioConfig& cfg = d.cfg;
  const std::uint64_t hz = cfg.platform.clock_hz;
  if (hz == 0) throw ConfigError(origin + ": platform.clock_hz must be positive");
  DramConfig& dram = cfg.platform.dram;
  if (d.dram_hit_ns) dram.t_row_hit = ns_to_cycles(*d.dram_hit_ns, hz);
  else dram.t_row_hit = ns_to_cycles(20.0, hz);
  if (d.dram_conflict_ns) dram.t_row_conflict = ns_to_cycles(*d.dram_conflict_ns, hz);
  else dram.t_row_conflict = ns_to_cycles(60.0, hz);
  if (d.dram_bus_ns) dram.t_bus = ns_to_cycles(*d.dram_bus_ns, hz);
  else dram.t_bus = ns_to_cycles(5.3, hz);
  if (!d.dram_seen) cfg.notes.push_back("no dram.* keys given; using DRAM defaults");

  // Budgets alone enable regulation; enabled = off wins over budgets.
  if (d.regulation_enabled == false) cfg.regulate.reset();
  if (d.regulation_enabled == true && !cfg.regulate) {
    throw ConfigError(origin + ": regulation.enabled = on needs regulation.read_mbps or regulation.write_mbps");
  }

  const double period_us = d.period_us.value_or(1000.0);
  if (!(period_us > 0)) throw ConfigError(origin + ": regulation.period_us must be positive");
  cfg.regulation_period = static_cast<Cycle>(std::llround(period_us * 1e-6 * static_cast<double>(hz)));

  for (unsigned c = 0; c < kMaxCores; ++c) {
    const CoreDraft& cd = d.cores[c];
    if (!cd.any) continue;
    const std::string p = origin + ": core" + std::to_string(c) + ": ";
    if (!cd.role) throw ConfigError(p + "role is required");
    if (*cd.role == "idle") continue;
    WorkloadSpec w;
    w.role = *cd.role == "victim" ? Role::Victim : Role::Attacker;
    w.kind = cd.kind.value_or(w.role == Role::Victim ? WorkloadKind::BwRead : WorkloadKind::BwWrite);
    w.working_set_bytes = cd.working_set.value_or(w.role == Role::Victim ? 96 * 1024 : 2 * 1024 * 1024);
    w.stride_bytes = cd.stride.value_or(cfg.platform.line_bytes);
    w.base_addr = cd.base;
    if (w.role == Role::Victim) {
      w.iterations = cd.iterations.value_or(200);
      w.warmup_iterations = cd.warmup.value_or(1);
    } else {
      if (cd.warmup) throw ConfigError(p + "attackers have no warmup");
      w.iterations = cd.iterations;
    }
    try {
      w.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(p + e.what());
    }
    cfg.workloads[c] = w;
  }

  if (std::any_of(d.masks.begin(), d.masks.end(), [](const auto& m) { return m.has_value(); })) {
    PartitionMap pm;
    for (unsigned c = 0; c < cfg.platform.cores; ++c) {
      if (!d.masks[c]) throw ConfigError(origin + ": partition.core" + std::to_string(c) + ".mask is missing");
      pm.masks.push_back(*d.masks[c]);
    }
    cfg.partition_masks = pm;
  }

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("cannot read config file '" + path + "'");
  return parse_config(ss.str(), path);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) {
      std::string g = k;
      for (std::size_t i = 0; i + 4 < g.size(); ++i) {
        if (g.compare(i, 4, "core") == 0 && std::isdigit(static_cast<unsigned char>(g[i + 4]))) g[i + 4] = 'N';
      }
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
    return out;
  }();
  return keys;
}

}  // namespace cachedos
