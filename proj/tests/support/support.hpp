#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "rfp/database.hpp"
#include "rfp/simulator.hpp"
#include "rfp/strategy.hpp"
#include "rfp/verdict.hpp"

namespace rfp::testing {

std::string source_path(std::string_view relative);
std::string read_file(const std::string& path);

Database load_db(std::string_view relative);
sim::SimulatorConfig load_sim(std::string_view relative);

struct AuditRun {
  DecisionLog log;
  VerdictReport report;
};

// One audit against an in-process simulated provider.
AuditRun audit_sim(const Database& db, std::shared_ptr<const sim::SimFamily> family,
                   const sim::SimProviderConfig& provider, StrategyKind strategy,
                   std::uint64_t seed, std::optional<std::size_t> budget = std::nullopt);

// "5.0.0b1+ 7.0.0+ 7.2.0- ..." with '*' after referral rows and '~' after
// implied rows.
std::string trace(const DecisionLog& log);

// A random valid database together with a simulated family that behaves
// exactly as the database describes.
struct Scenario {
  Database db;
  std::shared_ptr<const sim::SimFamily> sim;
  std::string db_json;
};

Scenario random_scenario(std::uint64_t seed, std::size_t max_versions = 50);

}  // namespace rfp::testing
