#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfp/transport.hpp"
#include "rfp/version.hpp"

namespace rfp::sim {

class SimConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One stretch of releases that ship a function: from `introduced` up to (not
// including) `removed`, optionally only on one line.
struct Availability {
  Version introduced;
  std::optional<Version> removed;
  std::optional<Line> branch;

  bool contains(const Version& v) const;
};

// A behaviour of the simulated software. A payload matching `pattern` is
// answered with `present` where the function is available and with `absent`
// elsewhere; both are regex format strings ($1, $2, ...). "{claim}" expands to
// the label the provider claims to run.
struct SimFunction {
  std::string name;
  std::vector<Availability> windows;
  std::string pattern;
  std::string present;
  std::string absent;
  bool hard = true;

  bool available(const Version& v) const;
};

class SimFamily {
 public:
  SimFamily(VersionSet family, std::vector<SimFunction> functions, std::string error_output);

  const VersionSet& family() const noexcept { return family_; }
  const std::vector<SimFunction>& functions() const noexcept { return functions_; }
  const std::string& error_output() const noexcept { return error_output_; }
  const SimFunction* function(std::string_view name) const;

  // Output of the software at `v` for `payload`. Functions listed in
  // `forced` answer as if available.
  std::string evaluate(std::string_view payload, const Version& v, const std::string& claim,
                       const std::set<std::string>& forced = {}) const;

  // The function a payload exercises, if any.
  const SimFunction* match(std::string_view payload) const;

 private:
  VersionSet family_;
  std::vector<SimFunction> functions_;
  std::vector<std::regex> compiled_;
  std::string error_output_;
};

struct LatencyModel {
  std::chrono::microseconds base{0};
  std::chrono::microseconds jitter{0};
};

struct Honest {};
struct ClaimFaker {
  std::string label;
};
// Replays recorded challenge -> response pairs; stays silent on anything new.
struct Cacher {
  std::map<std::string, std::string> store;
  static Cacher from_records(const std::vector<ExchangeRecord>& records);
};
// Forwards to an honest installation of `upstream`, adding at least `floor`.
struct Proxy {
  std::chrono::microseconds floor{0};
  Version upstream;
};
// Emulates the listed functions in software; only non-hard ones are allowed.
struct FunctionFaker {
  std::set<std::string> functions;
};

using Behavior = std::variant<Honest, ClaimFaker, Cacher, Proxy, FunctionFaker>;

std::string_view behavior_name(const Behavior& b);

struct SimProviderConfig {
  Version src_version;
  Behavior behavior = Honest{};
  LatencyModel latency;
  std::uint64_t seed = 0;
};

class SimResponder : public LoopbackResponder {
 public:
  SimResponder(std::shared_ptr<const SimFamily> family, SimProviderConfig config);

  LoopbackReply respond(std::string_view payload) override;
  std::string version_claim() const override;

  const SimProviderConfig& config() const noexcept { return config_; }

 private:
  std::shared_ptr<const SimFamily> family_;
  SimProviderConfig config_;
  std::mt19937_64 jitter_rng_;
  std::mutex mutex_;
};

// Validates the configuration and builds the challenge-facing responder.
std::shared_ptr<SimResponder> produce(std::shared_ptr<const SimFamily> family,
                                      SimProviderConfig config);

struct SimulatorConfig {
  std::shared_ptr<const SimFamily> family;
  std::optional<SimProviderConfig> provider;
};

// {"family": {"name", "versions": [...], "error_output"},
//  "functions": [{"name", "hard", "introduced", "removed"?, "branch"?,
//                 "windows"?, "pattern", "present", "absent"}],
//  "provider": {"version", "behavior": {...}, "latency": {...}, "seed"}}
SimulatorConfig parse_simulator_config(std::string_view document);
Behavior parse_behavior(std::string_view document);

}  // namespace rfp::sim
