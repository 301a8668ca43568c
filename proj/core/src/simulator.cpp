#include "rfp/simulator.hpp"

#include <algorithm>

#include "json.hpp"

namespace rfp::sim {

using json = nlohmann::json;
using namespace std::chrono;

bool Availability::contains(const Version& v) const {
  if (v < introduced) return false;
  if (removed && !(v < *removed)) return false;
  if (branch && line_of(v) != *branch) return false;
  return true;
}

bool SimFunction::available(const Version& v) const {
  return std::any_of(windows.begin(), windows.end(),
                     [&](const Availability& w) { return w.contains(v); });
}

SimFamily::SimFamily(VersionSet family, std::vector<SimFunction> functions,
                     std::string error_output)
    : family_(std::move(family)), functions_(std::move(functions)),
      error_output_(std::move(error_output)) {
  std::set<std::string> names;
  for (const auto& f : functions_) {
    if (!names.insert(f.name).second) throw SimConfigError("duplicate function '" + f.name + "'");
    if (f.windows.empty()) throw SimConfigError("function '" + f.name + "' is never available");
    try {
      compiled_.emplace_back(f.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw SimConfigError("function '" + f.name + "': bad pattern: " + e.what());
    }
  }
}

const SimFunction* SimFamily::function(std::string_view name) const {
  for (const auto& f : functions_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const SimFunction* SimFamily::match(std::string_view payload) const {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    if (std::regex_search(payload.begin(), payload.end(), compiled_[i])) return &functions_[i];
  }
  return nullptr;
}

std::string SimFamily::evaluate(std::string_view payload, const Version& v,
                                const std::string& claim,
                                const std::set<std::string>& forced) const {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(payload.begin(), payload.end(), m, compiled_[i])) continue;
    const auto& f = functions_[i];
    bool on = f.available(v) || forced.count(f.name);
    std::string out = m.format(on ? f.present : f.absent);
    for (auto at = out.find("{claim}"); at != std::string::npos; at = out.find("{claim}", at)) {
      out.replace(at, 7, claim);
      at += claim.size();
    }
    return out;
  }
  return error_output_;
}

Cacher Cacher::from_records(const std::vector<ExchangeRecord>& records) {
  Cacher c;
  for (const auto& r : records) {
    if (r.response) c.store.emplace(r.challenge, *r.response);
  }
  return c;
}

std::string_view behavior_name(const Behavior& b) {
  struct {
    std::string_view operator()(const Honest&) const { return "honest"; }
    std::string_view operator()(const ClaimFaker&) const { return "claim-faker"; }
    std::string_view operator()(const Cacher&) const { return "cacher"; }
    std::string_view operator()(const Proxy&) const { return "proxy"; }
    std::string_view operator()(const FunctionFaker&) const { return "function-faker"; }
  } name;
  return std::visit(name, b);
}

SimResponder::SimResponder(std::shared_ptr<const SimFamily> family, SimProviderConfig config)
    : family_(std::move(family)), config_(std::move(config)), jitter_rng_(config_.seed) {}

LoopbackReply SimResponder::respond(std::string_view payload) {
  std::lock_guard lock(mutex_);
  LoopbackReply reply;
  reply.latency = config_.latency.base;
  if (config_.latency.jitter.count() > 0) {
    std::uniform_int_distribution<long long> d(0, config_.latency.jitter.count());
    reply.latency += microseconds(d(jitter_rng_));
  }

  const std::string claim = version_claim();
  if (auto* cacher = std::get_if<Cacher>(&config_.behavior)) {
    auto it = cacher->store.find(std::string(payload));
    if (it != cacher->store.end()) reply.output = it->second;
    return reply;
  }
  if (auto* proxy = std::get_if<Proxy>(&config_.behavior)) {
    reply.latency += proxy->floor;
    reply.output = family_->evaluate(payload, proxy->upstream, claim);
    return reply;
  }
  if (auto* faker = std::get_if<FunctionFaker>(&config_.behavior)) {
    reply.output = family_->evaluate(payload, config_.src_version, claim, faker->functions);
    return reply;
  }
  reply.output = family_->evaluate(payload, config_.src_version, claim);
  return reply;
}

std::string SimResponder::version_claim() const {
  if (auto* faker = std::get_if<ClaimFaker>(&config_.behavior)) return faker->label;
  if (auto* proxy = std::get_if<Proxy>(&config_.behavior)) return proxy->upstream.raw();
  return config_.src_version.raw();
}

std::shared_ptr<SimResponder> produce(std::shared_ptr<const SimFamily> family,
                                      SimProviderConfig config) {
  if (!family) throw SimConfigError("no simulated family");
  if (!family->family().contains(config.src_version)) {
    throw SimConfigError("version '" + config.src_version.raw() + "' is not part of the family");
  }
  if (config.latency.base.count() < 0 || config.latency.jitter.count() < 0) {
    throw SimConfigError("latency must not be negative");
  }
  if (auto* faker = std::get_if<FunctionFaker>(&config.behavior)) {
    for (const auto& name : faker->functions) {
      const auto* f = family->function(name);
      if (!f) throw SimConfigError("cannot fake unknown function '" + name + "'");
      if (f->hard) {
        throw SimConfigError("function '" + name +
                             "' is simulation-hard; faking it is not economical");
      }
    }
  }
  if (auto* proxy = std::get_if<Proxy>(&config.behavior)) {
    if (proxy->floor.count() < 0) throw SimConfigError("proxy floor must not be negative");
    if (!family->family().contains(proxy->upstream)) {
      throw SimConfigError("proxy upstream '" + proxy->upstream.raw() + "' is not part of the family");
    }
  }
  return std::make_shared<SimResponder>(std::move(family), std::move(config));
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw SimConfigError("simulator config: " + what); }

Version label(const json& j, const std::string& what) {
  if (!j.is_string()) bad(what + " must be a version label");
  auto v = Version::try_parse(j.get<std::string>());
  if (!v) bad(what + " '" + j.get<std::string>() + "' is not a version label");
  return *v;
}

std::string text(const json& obj, const char* key, const std::string& what) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) bad(what + " needs a string '" + key + "'");
  return it->get<std::string>();
}

Line parse_line(const json& j, const std::string& what) {
  auto v = label(j, what);
  return line_of(v);
}

Availability parse_window(const json& j, const std::string& what) {
  if (!j.is_object()) bad(what + " must be an object");
  Availability a;
  if (!j.contains("introduced")) bad(what + " needs 'introduced'");
  a.introduced = label(j["introduced"], what + " introduced");
  if (j.contains("removed")) a.removed = label(j["removed"], what + " removed");
  if (j.contains("branch")) a.branch = parse_line(j["branch"], what + " branch");
  return a;
}

microseconds millis(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return microseconds{0};
  if (!it->is_number()) bad(std::string("'") + key + "' must be a number");
  return duration_cast<microseconds>(duration<double, std::milli>(it->get<double>()));
}

Behavior behavior_from(const json& j) {
  if (!j.is_object()) bad("behavior must be an object");
  auto kind = text(j, "kind", "behavior");
  if (kind == "honest") return Honest{};
  if (kind == "claim-faker") return ClaimFaker{text(j, "label", "claim-faker")};
  if (kind == "proxy") {
    Proxy p;
    p.floor = millis(j, "floor_ms");
    if (!j.contains("upstream")) bad("proxy needs 'upstream'");
    p.upstream = label(j["upstream"], "proxy upstream");
    return p;
  }
  if (kind == "function-faker") {
    FunctionFaker f;
    if (!j.contains("functions") || !j["functions"].is_array()) bad("function-faker needs 'functions'");
    for (const auto& n : j["functions"]) f.functions.insert(n.get<std::string>());
    return f;
  }
  if (kind == "cacher") {
    Cacher c;
    if (auto it = j.find("store"); it != j.end()) {
      for (const auto& pair : *it) {
        c.store.emplace(text(pair, "challenge", "cacher entry"), text(pair, "response", "cacher entry"));
      }
    }
    return c;
  }
  bad("unknown behavior '" + kind + "'");
}

}  // namespace

Behavior parse_behavior(std::string_view document) {
  try {
    return behavior_from(json::parse(document.begin(), document.end()));
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

SimulatorConfig parse_simulator_config(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    bad(std::string("not JSON: ") + e.what());
  }
  try {
    if (!root.is_object() || !root.contains("family")) bad("missing 'family'");
    const auto& fam = root["family"];
    VersionSet versions(text(fam, "name", "family"));
    if (!fam.contains("versions") || !fam["versions"].is_array()) bad("family needs 'versions'");
    for (const auto& v : fam["versions"]) {
      try {
        versions.insert(label(v, "family version"));
      } catch (const std::invalid_argument& e) {
        bad(e.what());
      }
    }
    std::string error_output = fam.value("error_output", std::string("error\n"));

    std::vector<SimFunction> functions;
    for (const auto& f : root.value("functions", json::array())) {
      SimFunction fn;
      fn.name = text(f, "name", "function");
      const std::string what = "function '" + fn.name + "'";
      fn.hard = f.value("hard", true);
      fn.pattern = text(f, "pattern", what);
      fn.present = text(f, "present", what);
      fn.absent = text(f, "absent", what);
      if (f.contains("windows")) {
        for (const auto& w : f["windows"]) fn.windows.push_back(parse_window(w, what + " window"));
      } else {
        fn.windows.push_back(parse_window(f, what));
      }
      functions.push_back(std::move(fn));
    }

    SimulatorConfig cfg;
    cfg.family = std::make_shared<SimFamily>(std::move(versions), std::move(functions), error_output);
    if (auto it = root.find("provider"); it != root.end()) {
      SimProviderConfig p;
      if (!it->contains("version")) bad("provider needs 'version'");
      p.src_version = label((*it)["version"], "provider version");
      if (it->contains("behavior")) p.behavior = behavior_from((*it)["behavior"]);
      if (it->contains("latency")) {
        const auto& lat = (*it)["latency"];
        p.latency.base = millis(lat, "base_ms");
        p.latency.jitter = millis(lat, "jitter_ms");
      }
      p.seed = it->value("seed", std::uint64_t{0});
      cfg.provider = std::move(p);
    }
    return cfg;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

}  // namespace rfp::sim
