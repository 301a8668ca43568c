#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rfp/decision_log.hpp"
#include "rfp/hierarchy.hpp"
#include "rfp/simulator.hpp"

namespace rfp {

// One observed intrinsic test result together with the provider versions on
// which that result is expected.
struct RegionConstraint {
  Version source;
  bool delta = false;
  Region region;
  bool admits(const Version& v) const { return region.contains(v) == delta; }
};

struct Inconsistency {
  Version first;
  Version second;
  std::string detail;
};

struct Bounds {
  // Greatest version whose plain cumulative test passed.
  std::optional<Version> lower;
  // Least version whose plain cumulative test failed.
  std::optional<Version> upper;
  // Windows [introduced, removed) that a passed deprecated test confirmed.
  std::vector<Window> deprecated_windows;
  // Line fixed by a branch-disambiguating test, if any.
  std::optional<Line> branch;
  // Every observation; the bounds above summarise the simple ones.
  std::vector<RegionConstraint> constraints;
  std::optional<Inconsistency> inconsistency;
};

struct CandidateSet {
  std::vector<Version> members;
  bool contains(const Version& v) const;
  bool operator==(const CandidateSet& other) const;
};

Bounds compute_bounds(const DecisionLog& log, const Hierarchy& hierarchy);
Bounds compute_bounds(const DecisionLog& log, const Database& db);

CandidateSet candidates(const Bounds& bounds, const Database& db);

bool compliance(const CandidateSet& c, const Version& target);

// Brute force: replays every selected plan of the log against an honest
// simulated provider at each family version and keeps the versions that
// reproduce every logged result.
CandidateSet oracle_candidates(const DecisionLog& log, const Database& db,
                               const sim::SimFamily& family);

struct ReportRow {
  Version version;
  bool result = false;
  std::size_t testorder = 0;
  Provenance provenance = Provenance::selected;
  std::string reason;
};

struct VerdictReport {
  static constexpr int kSchemaVersion = 1;
  std::string service;
  std::string strategy;
  std::optional<Version> target;
  std::optional<std::string> claim;
  Bounds bounds;
  CandidateSet candidates;
  std::optional<bool> compliant;
  std::vector<ReportRow> rows;
  std::size_t exchanges = 0;
};

VerdictReport make_report(const DecisionLog& log, const Database& db, const std::string& strategy,
                          const std::optional<Version>& target);

std::string report_json(const VerdictReport& report);
// Plain-text "Version | Result | Testorder" table plus summary lines.
std::string report_table(const VerdictReport& report);

}  // namespace rfp
