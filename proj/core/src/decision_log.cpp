#include "rfp/decision_log.hpp"

namespace rfp {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::selected: return "selected";
    case Provenance::referral: return "referral";
    case Provenance::implied: return "implied";
  }
  return "";
}

void DecisionLog::append(DecisionEntry entry) {
  if (contains(entry.version)) {
    throw std::logic_error("version '" + entry.version.raw() + "' is already decided");
  }
  entries_.push_back(std::move(entry));
}

bool DecisionLog::contains(const Version& v) const { return find(v) != nullptr; }

const DecisionEntry* DecisionLog::find(const Version& v) const {
  for (const auto& e : entries_) {
    if (e.version == v) return &e;
  }
  return nullptr;
}

std::vector<RawObservation> DecisionLog::observations() const {
  std::vector<RawObservation> out;
  for (const auto& e : entries_) {
    if (e.provenance != Provenance::selected) continue;
    for (const auto& sub : e.outcome.sub_outcomes) {
      if (!sub.reused) out.push_back({sub.version, sub.observed, sub.reason});
    }
  }
  return out;
}

std::size_t DecisionLog::exchange_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.outcome.exchanges.size();
  return n;
}

}  // namespace rfp
