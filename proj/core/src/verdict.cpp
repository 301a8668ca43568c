#include "rfp/verdict.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace rfp {

bool CandidateSet::contains(const Version& v) const {
  return std::binary_search(members.begin(), members.end(), v);
}

bool CandidateSet::operator==(const CandidateSet& other) const {
  return members == other.members;
}

namespace {

std::optional<Window> confirmed_window(const RegionConstraint& c) {
  const auto& r = c.region;
  if (!c.delta || r.pieces.size() != 1 || r.pieces[0].line || r.exclusions.size() != 1) {
    return std::nullopt;
  }
  return Window{r.pieces[0].from, r.exclusions[0].from};
}

bool is_branched(const RegionConstraint& c) {
  return std::any_of(c.region.pieces.begin(), c.region.pieces.end(),
                     [](const RegionPiece& p) { return p.line.has_value(); });
}

std::string describe(const RegionConstraint& c) {
  return "'" + c.source.raw() + "' " + (c.delta ? "passed" : "failed");
}

}  // namespace

Bounds compute_bounds(const DecisionLog& log, const Hierarchy& hierarchy) {
  const auto& db = hierarchy.database();
  Bounds b;
  for (const auto& obs : log.observations()) {
    b.constraints.push_back({obs.version, obs.delta, hierarchy.region(obs.version)});
  }

  std::optional<std::size_t> lower_at, upper_at;
  for (std::size_t i = 0; i < b.constraints.size(); ++i) {
    const auto& c = b.constraints[i];
    if (c.region.is_upset()) {
      if (c.delta && (!b.lower || *b.lower < c.source)) {
        b.lower = c.source;
        lower_at = i;
      }
      if (!c.delta && (!b.upper || c.source < *b.upper)) {
        b.upper = c.source;
        upper_at = i;
      }
    }
    if (auto w = confirmed_window(c)) b.deprecated_windows.push_back(*w);
  }

  if (b.lower && b.upper && !(*b.lower < *b.upper)) {
    b.inconsistency = Inconsistency{
        *b.upper, *b.lower,
        describe(b.constraints[*upper_at]) + " but the higher " + describe(b.constraints[*lower_at])};
    return b;
  }

  std::vector<Version> consistent(db.family().begin(), db.family().end());
  for (std::size_t k = 0; k < b.constraints.size(); ++k) {
    const auto& ck = b.constraints[k];
    std::vector<Version> next;
    for (const auto& v : consistent) {
      if (ck.admits(v)) next.push_back(v);
    }
    if (next.empty() && !consistent.empty()) {
      std::size_t partner = k == 0 ? 0 : k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& cj = b.constraints[j];
        bool overlap = std::any_of(db.family().begin(), db.family().end(), [&](const Version& v) {
          return cj.admits(v) && ck.admits(v);
        });
        if (!overlap) {
          partner = j;
          break;
        }
      }
      const auto& cp = b.constraints[partner];
      b.inconsistency = Inconsistency{
          cp.source, ck.source,
          partner == k ? describe(ck) + " on no family version"
                       : describe(cp) + " and " + describe(ck) + " admit no common version"};
      return b;
    }
    consistent = std::move(next);
  }

  bool branched = std::any_of(b.constraints.begin(), b.constraints.end(), is_branched);
  if (branched && !consistent.empty()) {
    Line line = line_of(consistent.front());
    bool one_line = std::all_of(consistent.begin(), consistent.end(),
                                [&](const Version& v) { return line_of(v) == line; });
    if (one_line) b.branch = line;
  }
  return b;
}

Bounds compute_bounds(const DecisionLog& log, const Database& db) {
  Hierarchy h(db);
  return compute_bounds(log, h);
}

CandidateSet candidates(const Bounds& bounds, const Database& db) {
  CandidateSet c;
  if (bounds.inconsistency) return c;
  for (const auto& v : db.family()) {
    if (bounds.lower && v < *bounds.lower) continue;
    if (bounds.upper && !(v < *bounds.upper)) continue;
    if (bounds.branch && line_of(v) != *bounds.branch) continue;
    bool ok = std::all_of(bounds.constraints.begin(), bounds.constraints.end(),
                          [&](const RegionConstraint& r) { return r.admits(v); });
    if (ok) c.members.push_back(v);
  }
  return c;
}

bool compliance(const CandidateSet& c, const Version& target) { return c.contains(target); }

CandidateSet oracle_candidates(const DecisionLog& log, const Database& db,
                               const sim::SimFamily& family) {
  // Non-owning handle; the responders below do not outlive this call.
  std::shared_ptr<const sim::SimFamily> fam(&family, [](const sim::SimFamily*) {});
  CandidateSet c;
  std::uint64_t seed = 0x6f7261636c65ULL;
  for (const auto& v : db.family()) {
    auto responder = std::make_shared<sim::SimResponder>(fam, sim::SimProviderConfig{v});
    Transport transport;
    transport.register_loopback("oracle", responder);
    InterfaceEndpoint ep{"oracle", EndpointKind::loopback_sim, "oracle"};
    auto rng = RandomnessSource::seeded(seed++);
    DirectExecutor executor(transport, {ep, ep}, rng);

    bool keep = true;
    for (const auto& row : log.entries()) {
      if (row.provenance != Provenance::selected) continue;
      auto replay = run_test(resolve_plan(db, row.version), db, executor);
      const auto& logged = row.outcome.sub_outcomes;
      if (replay.sub_outcomes.size() != logged.size()) {
        keep = false;
        break;
      }
      for (std::size_t i = 0; i < logged.size() && keep; ++i) {
        keep = replay.sub_outcomes[i].version == logged[i].version &&
               replay.sub_outcomes[i].observed == logged[i].observed;
      }
      if (!keep) break;
    }
    if (keep) c.members.push_back(v);
  }
  return c;
}

VerdictReport make_report(const DecisionLog& log, const Database& db, const std::string& strategy,
                          const std::optional<Version>& target) {
  VerdictReport r;
  r.service = db.meta().service_name;
  r.strategy = strategy;
  r.target = target;
  r.bounds = compute_bounds(log, db);
  r.candidates = candidates(r.bounds, db);
  if (target) r.compliant = compliance(r.candidates, *target);
  std::size_t order = 0;
  for (const auto& e : log.entries()) {
    ReportRow row{e.version, e.delta, ++order, e.provenance, ""};
    for (const auto& sub : e.outcome.sub_outcomes) {
      if (!sub.satisfied() && sub.reason != Reason::none) {
        row.reason = std::string(to_string(sub.reason));
        break;
      }
    }
    r.rows.push_back(std::move(row));
  }
  r.exchanges = log.exchange_count();
  return r;
}

std::string report_json(const VerdictReport& r) {
  using json = nlohmann::ordered_json;
  auto label = [](const std::optional<Version>& v) { return v ? json(v->raw()) : json(nullptr); };
  json j;
  j["schema_version"] = VerdictReport::kSchemaVersion;
  j["service"] = r.service;
  j["strategy"] = r.strategy;
  j["target"] = label(r.target);
  j["claim"] = r.claim ? json(*r.claim) : json(nullptr);
  json bounds;
  bounds["lower"] = label(r.bounds.lower);
  bounds["upper"] = label(r.bounds.upper);
  bounds["deprecated_windows"] = json::array();
  for (const auto& w : r.bounds.deprecated_windows) {
    bounds["deprecated_windows"].push_back({{"introduced", w.from.raw()}, {"removed", label(w.until)}});
  }
  bounds["branch"] = r.bounds.branch ? json(to_string(*r.bounds.branch)) : json(nullptr);
  j["bounds"] = bounds;
  j["candidates"] = json::array();
  for (const auto& v : r.candidates.members) j["candidates"].push_back(v.raw());
  j["compliance"] = r.compliant ? json(*r.compliant) : json(nullptr);
  if (r.bounds.inconsistency) {
    const auto& inc = *r.bounds.inconsistency;
    j["inconsistency"] = {{"first", inc.first.raw()}, {"second", inc.second.raw()}, {"detail", inc.detail}};
  } else {
    j["inconsistency"] = nullptr;
  }
  j["tests"] = json::array();
  for (const auto& row : r.rows) {
    json t = {{"version", row.version.raw()},
              {"result", row.result},
              {"testorder", row.testorder},
              {"provenance", std::string(to_string(row.provenance))}};
    if (!row.reason.empty()) t["reason"] = row.reason;
    j["tests"].push_back(t);
  }
  j["exchanges"] = r.exchanges;
  return j.dump(2) + "\n";
}

std::string report_table(const VerdictReport& r) {
  std::size_t width = 7;
  for (const auto& row : r.rows) width = std::max(width, row.version.raw().size());
  auto pad = [](std::string s, std::size_t n) {
    if (s.size() < n) s.append(n - s.size(), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("Version", width) << "  Result  Testorder\n";
  for (const auto& row : r.rows) {
    out << pad(row.version.raw(), width) << "  " << (row.result ? "✓" : "✗") << "       "
        << pad(std::to_string(row.testorder), 9);
    if (row.provenance != Provenance::selected) out << "  (" << to_string(row.provenance) << ")";
    if (!row.reason.empty()) out << "  [" << row.reason << "]";
    out << "\n";
  }
  out << "\n";
  if (r.claim) out << "claimed version: " << *r.claim << "\n";
  out << "bounds: lower=" << (r.bounds.lower ? r.bounds.lower->raw() : "-")
      << " upper=" << (r.bounds.upper ? r.bounds.upper->raw() : "-");
  if (r.bounds.branch) out << " branch=" << to_string(*r.bounds.branch);
  out << "\n";
  if (r.bounds.inconsistency) {
    out << "inconsistent results: " << r.bounds.inconsistency->detail << "\n";
  }
  out << "candidates: {";
  for (std::size_t i = 0; i < r.candidates.members.size(); ++i) {
    out << (i ? ", " : "") << r.candidates.members[i].raw();
  }
  out << "}\n";
  if (r.target) {
    out << "compliance: " << (r.compliant.value_or(false) ? "true" : "false") << " (target "
        << r.target->raw() << ")\n";
  }
  return out.str();
}

}  // namespace rfp
