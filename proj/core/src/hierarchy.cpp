#include "rfp/hierarchy.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace rfp {

bool Region::contains(const Version& v) const {
  for (const auto& w : exclusions) {
    if (w.contains(v)) return false;
  }
  for (const auto& p : pieces) {
    if (!(v < p.from) && (!p.line || line_of(v) == *p.line)) return true;
  }
  return false;
}

bool Region::is_upset() const {
  return pieces.size() == 1 && !pieces[0].line && exclusions.empty();
}

std::string Region::describe() const {
  std::string out;
  for (const auto& p : pieces) {
    if (!out.empty()) out += " | ";
    out += ">=" + p.from.raw();
    if (p.line) out += " on " + to_string(*p.line);
  }
  for (const auto& w : exclusions) {
    out += " except [" + w.from.raw() + ", " + (w.until ? w.until->raw() : std::string("inf")) + ")";
  }
  return out;
}

Hierarchy::Hierarchy(const Database& db) : db_(&db) {
  std::vector<Version> intrinsic;
  for (const auto& [v, t] : db.entries()) {
    if (t.has_intrinsic()) intrinsic.push_back(v);
  }

  for (const auto& w : intrinsic) {
    std::set<Version> group{w};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [x, t] : db.entries()) {
        if (group.count(x) || t.has_intrinsic()) continue;
        for (const auto& ref : t.branching) {
          if (group.count(ref.version) &&
              classify_referral(db, t, ref.version) == ReferralKind::peer) {
            group.insert(x);
            grew = true;
            break;
          }
        }
      }
    }

    Region region;
    const Version& top = *group.rbegin();
    for (const auto& g : group) {
      if (g == top) {
        region.pieces.push_back({g, std::nullopt});
      } else {
        region.pieces.push_back({g, line_of(g)});
      }
    }
    if (const auto& dep = db.entry(w)->deprecated) {
      region.exclusions.push_back({dep->removed, dep->reintroduced});
    }
    regions_.emplace(w, std::move(region));
    groups_.emplace(w, std::vector<Version>(group.begin(), group.end()));
  }

  for (const auto& v : db.family()) plans_.emplace(v, resolve_plan(db, v));
}

const Region& Hierarchy::region(const Version& w) const {
  auto it = regions_.find(w);
  if (it == regions_.end()) {
    throw std::out_of_range("'" + w.raw() + "' has no intrinsic test");
  }
  return it->second;
}

const TestPlan& Hierarchy::plan(const Version& v) const {
  auto it = plans_.find(v);
  if (it == plans_.end()) throw std::out_of_range("'" + v.raw() + "' is not a family member");
  return it->second;
}

const std::vector<Version>& Hierarchy::peer_group(const Version& w) const {
  auto it = groups_.find(w);
  if (it == groups_.end()) throw std::out_of_range("'" + w.raw() + "' has no intrinsic test");
  return it->second;
}

bool Hierarchy::plan_holds(const TestPlan& plan, const Version& provider) const {
  for (const auto& step : plan.steps) {
    bool expected = step.polarity == Polarity::expect_pass;
    if (step_outcome(step, provider) != expected) return false;
  }
  return true;
}

std::vector<bool> Hierarchy::predicted_outcomes(const TestPlan& plan,
                                                const Version& provider) const {
  std::vector<bool> out;
  for (const auto& step : plan.steps) {
    bool observed = step_outcome(step, provider);
    out.push_back(observed);
    if (observed != (step.polarity == Polarity::expect_pass)) break;
  }
  return out;
}

std::vector<std::string> hierarchy_problems(const Database& db) {
  std::vector<std::string> problems;
  for (const auto& [x, t] : db.entries()) {
    std::size_t peers = 0;
    for (const auto& ref : t.branching) {
      if (ref.version == x || classify_referral(db, t, ref.version) != ReferralKind::peer) continue;
      ++peers;
      const auto* target = db.entry(ref.version);
      if (target && target->deprecated) {
        problems.push_back("'" + x.raw() + "' shares the deprecated test of '" +
                           ref.version.raw() + "'");
      }
    }
    if (peers > 1) {
      problems.push_back("'" + x.raw() + "' shares the function of more than one other branch");
    }
  }
  if (!problems.empty()) return problems;

  Hierarchy h(db);
  for (const auto& [x, t] : db.entries()) {
    const auto& plan = h.plan(x);
    if (!plan.empty() && !h.plan_holds(plan, x)) {
      problems.push_back("plan of '" + x.raw() + "' fails against '" + x.raw() + "' itself");
    }
  }
  return problems;
}

}  // namespace rfp
