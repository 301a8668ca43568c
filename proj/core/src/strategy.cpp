#include "rfp/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rfp {

namespace {

struct Name {
  std::string_view short_name;
  std::string_view long_name;
  StrategyKind kind;
};

constexpr Name kNames[] = {
    {"BS", "BinarySearch", StrategyKind::BS},
    {"CBS", "CascadingBinarySearch", StrategyKind::CBS},
    {"HTL", "HighToLow", StrategyKind::HTL},
    {"LTH", "LowToHigh", StrategyKind::LTH},
    {"HMSU", "MajorHighestStepUp", StrategyKind::HMSU},
};

std::vector<std::uint32_t> majors_of(const std::vector<Version>& vs) {
  std::vector<std::uint32_t> out;
  for (const auto& v : vs) {
    if (out.empty() || out.back() != v.major()) out.push_back(v.major());
  }
  return out;
}

std::vector<Line> lines_of(const std::vector<Version>& vs) {
  std::vector<Line> out;
  for (const auto& v : vs) {
    if (out.empty() || out.back() != line_of(v)) out.push_back(line_of(v));
  }
  return out;
}

// The informative entry of `list` closest to index `at`, preferring the
// higher one on ties.
std::optional<Version> nearest_informative(const AuditState& s, const std::vector<Version>& list,
                                           std::size_t at) {
  const auto n = static_cast<long>(list.size());
  for (long d = 0; d < n; ++d) {
    for (long i : {static_cast<long>(at) + d, static_cast<long>(at) - d}) {
      if (i >= 0 && i < n && s.informative(list[static_cast<std::size_t>(i)])) {
        return list[static_cast<std::size_t>(i)];
      }
    }
  }
  return std::nullopt;
}

class BinarySearch : public Strategy {
 public:
  StrategyKind kind() const noexcept override { return StrategyKind::BS; }
  Pick next(const AuditState& s) override { return {bisection_pick(s), {}}; }
};

// Bisection over Major, then over the lines of the remaining Major, then over
// patches; at each level the middle is taken rounding up.
class CascadingBinarySearch : public Strategy {
 public:
  StrategyKind kind() const noexcept override { return StrategyKind::CBS; }

  Pick next(const AuditState& s) override {
    const auto& c = s.candidates();
    const auto& family = s.db().family();

    auto majors = majors_of(c);
    if (majors.size() > 1) {
      std::vector<Version> reps;
      for (auto m : majors) {
        auto rep = family.major_origin(m);
        if (rep && s.selectable(*rep)) reps.push_back(*rep);
      }
      if (auto v = pick(s, reps)) return {v, {}};
    }
    auto lines = lines_of(c);
    if (lines.size() > 1) {
      std::vector<Version> reps;
      for (const auto& l : lines) {
        auto rep = family.line_origin(l);
        if (rep && s.selectable(*rep)) reps.push_back(*rep);
      }
      if (auto v = pick(s, reps)) return {v, {}};
    }
    std::vector<Version> patches;
    for (const auto& v : c) {
      if (s.selectable(v)) patches.push_back(v);
    }
    return {pick(s, patches), {}};
  }

 private:
  static std::optional<Version> pick(const AuditState& s, const std::vector<Version>& list) {
    if (list.empty()) return std::nullopt;
    return nearest_informative(s, list, list.size() / 2);
  }
};

// Walks the entries from one end of the family; everything it passes over
// with a known result is logged as implied.
class Sweep : public Strategy {
 public:
  explicit Sweep(bool descending) : descending_(descending) {}
  StrategyKind kind() const noexcept override {
    return descending_ ? StrategyKind::HTL : StrategyKind::LTH;
  }

  Pick next(const AuditState& s) override {
    auto order = s.selectable_versions();
    if (descending_) std::reverse(order.begin(), order.end());
    Pick p;
    for (const auto& v : order) {
      if (s.informative(v)) {
        p.version = v;
        return p;
      }
      if (s.determined(v)) p.implied.push_back(v);
    }
    p.implied.clear();
    return p;
  }

 private:
  bool descending_;
};

// Highest Major first, then line origins upward, then patches upward.
class MajorHighestStepUp : public Strategy {
 public:
  StrategyKind kind() const noexcept override { return StrategyKind::HMSU; }

  Pick next(const AuditState& s) override {
    const auto& c = s.candidates();
    const auto& family = s.db().family();
    auto majors = majors_of(c);
    if (majors.size() > 1) {
      auto rep = family.major_origin(majors.back());
      if (rep && s.selectable(*rep) && s.informative(*rep)) return {rep, {}};
    }
    for (const auto& l : lines_of(c)) {
      auto origin = family.line_origin(l);
      if (origin && s.selectable(*origin) && s.informative(*origin)) return {origin, {}};
    }
    for (const auto& v : c) {
      if (s.selectable(v) && s.informative(v)) return {v, {}};
    }
    return {};
  }
};

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& n : kNames) {
    if (n.kind == kind) return n.short_name;
  }
  return "";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (const auto& n : kNames) {
    if (name == n.short_name || name == n.long_name) return n.kind;
  }
  return std::nullopt;
}

StrategyKind strategy_from_name(std::string_view name) {
  auto kind = parse_strategy(name);
  if (!kind) throw StrategyError("unknown strategy '" + std::string(name) + "'");
  return *kind;
}

std::size_t default_budget(std::size_t family_size) {
  if (family_size <= 1) return 4;
  return 4 * static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(family_size))));
}

AuditState::AuditState(const Hierarchy& hierarchy, const DecisionLog& log,
                       std::vector<Version> candidates)
    : hierarchy_(&hierarchy), log_(&log), candidates_(std::move(candidates)) {}

bool AuditState::selectable(const Version& v) const {
  return db().entry(v) && !decided(v) && !hierarchy_->plan(v).empty();
}

bool AuditState::informative(const Version& v) const {
  if (!selectable(v) || candidates_.size() < 2) return false;
  const auto& plan = hierarchy_->plan(v);
  auto first = hierarchy_->predicted_outcomes(plan, candidates_.front());
  for (std::size_t i = 1; i < candidates_.size(); ++i) {
    if (hierarchy_->predicted_outcomes(plan, candidates_[i]) != first) return true;
  }
  return false;
}

std::optional<bool> AuditState::determined(const Version& v) const {
  if (candidates_.empty() || !db().entry(v)) return std::nullopt;
  const auto& plan = hierarchy_->plan(v);
  bool first = hierarchy_->plan_holds(plan, candidates_.front());
  for (const auto& u : candidates_) {
    if (hierarchy_->plan_holds(plan, u) != first) return std::nullopt;
  }
  return first;
}

std::vector<Version> AuditState::selectable_versions() const {
  std::vector<Version> out;
  for (const auto& v : db().family()) {
    if (selectable(v)) out.push_back(v);
  }
  return out;
}

std::optional<Version> bisection_pick(const AuditState& s) {
  const auto& c = s.candidates();
  if (c.size() < 2) return std::nullopt;
  const auto& family = s.db().family().versions();
  auto at = s.db().family().index_of(c[c.size() / 2]).value_or(0);
  return nearest_informative(s, family, at);
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::BS: return std::make_unique<BinarySearch>();
    case StrategyKind::CBS: return std::make_unique<CascadingBinarySearch>();
    case StrategyKind::HTL: return std::make_unique<Sweep>(true);
    case StrategyKind::LTH: return std::make_unique<Sweep>(false);
    case StrategyKind::HMSU: return std::make_unique<MajorHighestStepUp>();
  }
  throw StrategyError("unknown strategy");
}

DecisionLog run_audit(const Database& db, StrategyKind kind, SubTestExecutor& executor,
                      std::optional<std::size_t> budget) {
  const std::size_t limit = budget.value_or(default_budget(db.family().size()));
  Hierarchy hierarchy(db);
  auto strategy = make_strategy(kind);
  DecisionLog log;
  ObservationCache cache;
  std::vector<Version> c(db.family().begin(), db.family().end());

  for (std::size_t spent = 0; spent < limit && c.size() > 1; ++spent) {
    AuditState state(hierarchy, log, c);
    Pick pick = strategy->next(state);
    if (!pick.version || !state.informative(*pick.version)) {
      pick.version = bisection_pick(state);
      pick.implied.clear();
    }
    if (!pick.version) break;

    for (const auto& v : pick.implied) {
      auto known = state.determined(v);
      if (!known || log.contains(v)) continue;
      TestOutcome outcome{v, *known, {}, {}};
      log.append({v, *known, Provenance::implied, std::move(outcome), std::chrono::system_clock::now()});
    }

    const Version x = *pick.version;
    auto outcome = run_test(hierarchy.plan(x), db, executor, &cache);
    auto now = std::chrono::system_clock::now();
    for (const auto& sub : outcome.sub_outcomes) {
      if (sub.reused) continue;
      std::vector<Version> next;
      const auto& region = hierarchy.region(sub.version);
      for (const auto& u : c) {
        if (region.contains(u) == sub.observed) next.push_back(u);
      }
      c = std::move(next);
      if (!(sub.version == x) && !log.contains(sub.version)) {
        SubOutcome own = sub;
        own.polarity = Polarity::expect_pass;
        TestOutcome ref{sub.version, sub.observed, {own}, {}};
        log.append({sub.version, sub.observed, Provenance::referral, std::move(ref), now});
      }
    }
    bool delta = outcome.delta;
    log.append({x, delta, Provenance::selected, std::move(outcome), now});
  }
  return log;
}

DecisionLog run_audit(const Database& db, std::string_view strategy_name,
                      const Endpoints& endpoints, RandomnessSource& rng, Transport& transport,
                      std::optional<std::size_t> budget, unsigned repeat) {
  auto kind = strategy_from_name(strategy_name);
  DirectExecutor executor(transport, endpoints, rng, repeat);
  return run_audit(db, kind, executor, budget);
}

}  // namespace rfp
