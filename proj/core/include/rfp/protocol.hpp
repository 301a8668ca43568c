#pragma once

#include <map>
#include <vector>

#include "rfp/challenge.hpp"
#include "rfp/database.hpp"
#include "rfp/transport.hpp"

namespace rfp {

struct SubOutcome {
  Version version;
  Polarity polarity = Polarity::expect_pass;
  // Judge output of the intrinsic test (before polarity is applied).
  bool observed = false;
  Reason reason = Reason::none;
  // Answered from an earlier run in the same audit, without an exchange.
  bool reused = false;

  bool satisfied() const noexcept { return observed == (polarity == Polarity::expect_pass); }
};

struct TestOutcome {
  Version version;
  bool delta = true;
  std::vector<SubOutcome> sub_outcomes;
  std::vector<ExchangeRecord> exchanges;
};

// Result of running one intrinsic test against the provider.
struct Observation {
  bool delta = false;
  Reason reason = Reason::none;
  std::vector<ExchangeRecord> exchanges;
  std::vector<Binding> bindings;
};

// Runs a single intrinsic test. Implementations draw fresh randomness for
// every call.
class SubTestExecutor {
 public:
  virtual ~SubTestExecutor() = default;
  virtual Observation execute(const Database& db, const VersionTest& test) = 0;
};

struct Endpoints {
  InterfaceEndpoint challenge;
  InterfaceEndpoint response;
};

// Render, exchange and judge over a transport. With repeat > 1 each intrinsic
// test runs that many times and passes only if every run passes.
class DirectExecutor : public SubTestExecutor {
 public:
  DirectExecutor(Transport& transport, Endpoints endpoints, RandomnessSource& rng,
                 unsigned repeat = 1);
  Observation execute(const Database& db, const VersionTest& test) override;

 private:
  Transport* transport_;
  Endpoints endpoints_;
  RandomnessSource* rng_;
  unsigned repeat_;
};

using ObservationCache = std::map<Version, Observation>;

// Executes the plan in order, stopping at the first step whose observed
// result contradicts its polarity. Steps found in `cache` are not re-run;
// fresh observations are added to it.
TestOutcome run_test(const TestPlan& plan, const Database& db, SubTestExecutor& executor,
                     ObservationCache* cache = nullptr);

TestOutcome run_test(const TestPlan& plan, const Endpoints& endpoints, RandomnessSource& rng,
                     const Database& db, Transport& transport);

std::vector<TestOutcome> repeat_test(const TestPlan& plan, const Endpoints& endpoints,
                                     RandomnessSource& rng, const Database& db,
                                     Transport& transport, std::size_t n);

// All-must-agree combiner: true iff every run passed.
bool all_agree(const std::vector<TestOutcome>& runs);

}  // namespace rfp
