#include "support.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#ifndef RFP_SOURCE_DIR
#error "RFP_SOURCE_DIR must be defined"
#endif

namespace rfp::testing {

std::string source_path(std::string_view relative) {
  return std::string(RFP_SOURCE_DIR) + "/" + std::string(relative);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Database load_db(std::string_view relative) {
  return load_database(read_file(source_path(relative)));
}

sim::SimulatorConfig load_sim(std::string_view relative) {
  return sim::parse_simulator_config(read_file(source_path(relative)));
}

AuditRun audit_sim(const Database& db, std::shared_ptr<const sim::SimFamily> family,
                   const sim::SimProviderConfig& provider, StrategyKind strategy,
                   std::uint64_t seed, std::optional<std::size_t> budget) {
  Transport transport;
  transport.register_loopback("sim", sim::produce(std::move(family), provider));
  InterfaceEndpoint ep{"sim", EndpointKind::loopback_sim, "sim"};
  auto rng = RandomnessSource::seeded(seed);
  DirectExecutor executor(transport, {ep, ep}, rng);
  AuditRun run;
  run.log = run_audit(db, strategy, executor, budget);
  run.report = make_report(run.log, db, std::string(to_string(strategy)), std::nullopt);
  return run;
}

std::string trace(const DecisionLog& log) {
  std::string out;
  for (const auto& e : log.entries()) {
    if (!out.empty()) out += ' ';
    out += e.version.raw();
    out += e.delta ? '+' : '-';
    if (e.provenance == Provenance::referral) out += '*';
    if (e.provenance == Provenance::implied) out += '~';
  }
  return out;
}

namespace {

using json = nlohmann::ordered_json;

struct Gen {
  std::mt19937_64 rng;
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng); }
};

std::string line_key(const Version& v) { return to_string(line_of(v)); }

}  // namespace

Scenario random_scenario(std::uint64_t seed, std::size_t max_versions) {
  Gen g{std::mt19937_64(seed)};

  // Family: a few majors, each with a few lines, each with a few patches.
  std::vector<std::string> labels;
  std::uint32_t major = 1 + static_cast<std::uint32_t>(g.below(4));
  const std::size_t majors = 1 + g.below(3);
  for (std::size_t m = 0; m < majors && labels.size() < max_versions; ++m) {
    std::uint32_t minor = static_cast<std::uint32_t>(g.below(2));
    const std::size_t lines = 1 + g.below(4);
    for (std::size_t l = 0; l < lines && labels.size() < max_versions; ++l) {
      std::uint32_t patch = 0;
      if (g.chance(0.2)) {
        labels.push_back(std::to_string(major) + "." + std::to_string(minor) + ".0" +
                         (g.chance(0.5) ? "rc" : "b") + std::to_string(1 + g.below(4)));
      }
      const std::size_t patches = 1 + g.below(6);
      for (std::size_t p = 0; p < patches && labels.size() < max_versions; ++p) {
        labels.push_back(std::to_string(major) + "." + std::to_string(minor) + "." +
                         std::to_string(patch));
        patch += 1 + static_cast<std::uint32_t>(g.below(5));
      }
      minor += 1 + static_cast<std::uint32_t>(g.below(2));
    }
    major += 1 + static_cast<std::uint32_t>(g.below(3));
  }
  std::vector<Version> versions;
  for (const auto& s : labels) versions.push_back(Version::parse(s));
  VersionSet family("rand", versions);
  const auto& vs = family.versions();

  // Per version: own probe, references, deprecation boundary.
  struct Plan {
    bool own = false;
    bool entryless = false;
    std::vector<std::string> refs;
    std::optional<std::string> deprecated;
    std::vector<sim::Availability> windows;
  };
  std::map<std::string, Plan> plans;
  std::vector<std::string> origins;
  for (const auto& v : vs) {
    if (family.is_line_origin(v)) origins.push_back(v.raw());
  }
  const std::string top_line = line_key(vs.back());
  std::set<std::string> assigned;

  auto later_origins = [&](const Version& v) {
    std::vector<std::string> out;
    for (const auto& o : origins) {
      auto ov = Version::parse(o);
      if (v < ov && line_of(ov) != line_of(v)) out.push_back(o);
    }
    return out;
  };

  for (const auto& v : vs) {
    const auto label = v.raw();
    if (assigned.count(label)) continue;
    assigned.insert(label);
    Plan& p = plans[label];
    if (family.is_line_origin(v)) {
      p.own = true;
      p.windows.push_back({v, std::nullopt, std::nullopt});
      continue;
    }
    enum { global, entryless, deprecated, branched } kind = global;
    const bool top = line_key(v) == top_line;
    auto roll = g.below(top ? 2 : 4);
    kind = static_cast<decltype(kind)>(roll);

    if (kind == branched) {
      std::vector<std::string> peers;
      for (const auto& u : vs) {
        if (!(v < u) || line_of(u) == line_of(v) || family.is_line_origin(u)) continue;
        if (assigned.count(u.raw())) continue;
        peers.push_back(u.raw());
      }
      if (peers.empty()) {
        kind = global;
      } else {
        auto u = Version::parse(peers[g.below(peers.size())]);
        assigned.insert(u.raw());
        p.own = true;
        p.windows.push_back({v, std::nullopt, line_of(v)});
        p.windows.push_back({u, std::nullopt, std::nullopt});
        Plan& q = plans[u.raw()];
        q.refs = {family.line_origin(line_of(u))->raw(), label};
        continue;
      }
    }
    if (kind == deprecated) {
      auto later = later_origins(v);
      if (later.empty()) {
        kind = global;
      } else {
        auto d = later[g.below(later.size())];
        p.own = true;
        p.deprecated = d;
        auto dv = Version::parse(d);
        if (d == later.front() && g.chance(0.5)) {
          p.windows.push_back({v, std::nullopt, line_of(v)});
        } else {
          p.windows.push_back({v, dv, std::nullopt});
        }
        continue;
      }
    }
    if (kind == entryless) {
      p.entryless = true;
      continue;
    }
    p.own = true;
    p.windows.push_back({v, std::nullopt, std::nullopt});
    // Technical dependency on an earlier line origin.
    if (g.chance(0.3)) {
      std::vector<std::string> lower;
      for (const auto& o : origins) {
        if (Version::parse(o) < v) lower.push_back(o);
      }
      if (!lower.empty()) p.refs.push_back(lower[g.below(lower.size())]);
    }
  }

  json doc;
  doc["creationTimestamp"] = "2020-01-01T00:00:00Z";
  doc["lastUpdateTimestamp"] = "2020-01-01T00:00:00Z";
  doc["defaultvalues"] = {{"version.test.challenge.setstarttag", false},
                          {"version.test.variables.format", "integer"},
                          {"version.test.waittime.amount", 200},
                          {"version.test.waittime.type", "milliseconds"}};
  doc["settings"] = {{"interface.challenges", "http"},
                     {"interface.responses", "http"},
                     {"strategies", {"BS", "CBS", "HTL", "LTH", "HMSU"}}};
  json versions_json = json::object();
  std::vector<sim::SimFunction> functions;
  std::size_t n = 0;
  for (const auto& v : vs) {
    const auto& p = plans[v.raw()];
    json test = json::object();
    if (p.own) {
      const auto f = "f" + std::to_string(++n);
      test["variables"] = {{"x", {{"min", 1}, {"max", 1000000000}}}};
      test["challenge"] = {{"payload", "probe_" + f + "(#x#);"}};
      test["expect"] = {{"payload", f + ":ok:#x#\n"}};
      sim::SimFunction fn;
      fn.name = f;
      fn.windows = p.windows;
      fn.pattern = "probe_" + f + "\\((\\d+)\\);";
      fn.present = f + ":ok:$1\n";
      fn.absent = f + ":missing\n";
      functions.push_back(std::move(fn));
    }
    if (!p.refs.empty()) {
      json b = json::object();
      for (const auto& r : p.refs) b[r] = "1";
      test["branching"] = b;
    }
    if (p.deprecated) test["deprecated"] = *p.deprecated;
    versions_json[v.raw()] = test.empty() ? json::object() : json{{"test", test}};
  }
  doc["service"] = {{"name", "rand"}, {"versions", versions_json}};

  Scenario s;
  s.db_json = doc.dump(2);
  s.db = load_database(s.db_json);
  s.sim = std::make_shared<sim::SimFamily>(family, std::move(functions), "error\n");
  return s;
}

}  // namespace rfp::testing
