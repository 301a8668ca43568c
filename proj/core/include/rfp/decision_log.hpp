#pragma once

#include <stdexcept>
#include <vector>

#include "rfp/protocol.hpp"
#include "rfp/timestamp.hpp"

namespace rfp {

// selected: chosen by the strategy and run. referral: first run as a step
// inside another version's plan. implied: decided by earlier results without
// any exchange.
enum class Provenance { selected, referral, implied };
std::string_view to_string(Provenance p);

struct DecisionEntry {
  Version version;
  bool delta = false;
  Provenance provenance = Provenance::selected;
  TestOutcome outcome;
  TimePoint timestamp;
};

struct RawObservation {
  Version version;
  bool delta = false;
  Reason reason = Reason::none;
};

// Append-only record of decided versions; a version appears at most once.
class DecisionLog {
 public:
  void append(DecisionEntry entry);

  const std::vector<DecisionEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool contains(const Version& v) const;
  const DecisionEntry* find(const Version& v) const;

  // Every intrinsic test result obtained by an exchange, in execution order.
  // Taken from selected rows only; referral rows repeat what their parent
  // row already holds.
  std::vector<RawObservation> observations() const;
  std::size_t exchange_count() const;

 private:
  std::vector<DecisionEntry> entries_;
};

}  // namespace rfp
