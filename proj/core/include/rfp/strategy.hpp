#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rfp/decision_log.hpp"
#include "rfp/hierarchy.hpp"
#include "rfp/protocol.hpp"

namespace rfp {

enum class StrategyKind { BS, CBS, HTL, LTH, HMSU };

class StrategyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view to_string(StrategyKind kind);
// Accepts the abbreviations ("CBS") and the long names used in database
// settings ("CascadingBinarySearch").
std::optional<StrategyKind> parse_strategy(std::string_view name);
StrategyKind strategy_from_name(std::string_view name);

std::size_t default_budget(std::size_t family_size);

// What a strategy may look at: the database, the log so far and the set of
// versions still consistent with every observed result.
class AuditState {
 public:
  AuditState(const Hierarchy& hierarchy, const DecisionLog& log,
             std::vector<Version> candidates);

  const Hierarchy& hierarchy() const noexcept { return *hierarchy_; }
  const Database& db() const noexcept { return hierarchy_->database(); }
  const DecisionLog& log() const noexcept { return *log_; }
  const std::vector<Version>& candidates() const noexcept { return candidates_; }

  bool decided(const Version& v) const { return log_->contains(v); }
  // Has an entry with a non-empty plan and is not decided yet.
  bool selectable(const Version& v) const;
  // Running v's plan would split the candidate set.
  bool informative(const Version& v) const;
  // v's plan result, when it is the same for every candidate.
  std::optional<bool> determined(const Version& v) const;

  std::vector<Version> selectable_versions() const;

 private:
  const Hierarchy* hierarchy_;
  const DecisionLog* log_;
  std::vector<Version> candidates_;
};

struct Pick {
  std::optional<Version> version;
  // Versions passed over on the way to `version` whose results are already
  // fixed; they are logged without an exchange.
  std::vector<Version> implied;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual StrategyKind kind() const noexcept = 0;
  virtual Pick next(const AuditState& state) = 0;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind);

// Nearest informative version to the upper middle of the candidate set.
std::optional<Version> bisection_pick(const AuditState& state);

// Runs strategy picks until the candidate set cannot shrink any further or
// `budget` picks were spent. A pick the strategy cannot justify falls back
// to bisection_pick.
DecisionLog run_audit(const Database& db, StrategyKind strategy, SubTestExecutor& executor,
                      std::optional<std::size_t> budget = std::nullopt);

DecisionLog run_audit(const Database& db, std::string_view strategy_name,
                      const Endpoints& endpoints, RandomnessSource& rng, Transport& transport,
                      std::optional<std::size_t> budget = std::nullopt, unsigned repeat = 1);

}  // namespace rfp
