#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfp/database.hpp"
#include "rfp/version.hpp"

namespace rfp {

// {v : v >= from}, optionally restricted to one line.
struct RegionPiece {
  Version from;
  std::optional<Line> line;
};

// [from, until); open-ended when `until` is absent.
struct Window {
  Version from;
  std::optional<Version> until;
  bool contains(const Version& v) const { return !(v < from) && (!until || v < *until); }
};

// Set of provider versions on which an intrinsic test passes: a union of
// pieces minus exclusion windows.
struct Region {
  std::vector<RegionPiece> pieces;
  std::vector<Window> exclusions;

  bool contains(const Version& v) const;
  // True for the plain cumulative case {v : v >= pieces[0].from}.
  bool is_upset() const;
  std::string describe() const;
};

// Availability model derived from the database structure alone. An intrinsic
// test of w passes from w upward on every line; a peer group (entries that
// share w's function on later lines) restricts all but the highest member to
// its own line; a deprecation removes the window [removed, reintroduced).
class Hierarchy {
 public:
  explicit Hierarchy(const Database& db);

  const Database& database() const noexcept { return *db_; }
  // Pre: w has an intrinsic test.
  const Region& region(const Version& w) const;
  // Pre: v is a family member.
  const TestPlan& plan(const Version& v) const;

  bool step_outcome(const PlanStep& step, const Version& provider) const {
    return region(step.version).contains(provider);
  }
  bool plan_holds(const TestPlan& plan, const Version& provider) const;
  // Observed outcomes of the steps that would run against `provider`,
  // stopping after the first polarity violation.
  std::vector<bool> predicted_outcomes(const TestPlan& plan, const Version& provider) const;

  // Peer group of an intrinsic test (including w), ascending.
  const std::vector<Version>& peer_group(const Version& w) const;

 private:
  const Database* db_;
  std::map<Version, Region> regions_;
  std::map<Version, std::vector<Version>> groups_;
  std::map<Version, TestPlan> plans_;
};

std::vector<std::string> hierarchy_problems(const Database& db);

}  // namespace rfp
