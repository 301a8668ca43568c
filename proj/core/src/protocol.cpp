#include "rfp/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace rfp {

DirectExecutor::DirectExecutor(Transport& transport, Endpoints endpoints, RandomnessSource& rng,
                               unsigned repeat)
    : transport_(&transport), endpoints_(std::move(endpoints)), rng_(&rng),
      repeat_(std::max(1u, repeat)) {}

Observation DirectExecutor::execute(const Database& db, const VersionTest& test) {
  Observation obs;
  obs.delta = true;
  for (unsigned i = 0; i < repeat_; ++i) {
    auto binding = draw_binding(test, *rng_, db.family());
    auto rendered = render_test(db, test, binding);
    auto record = transport_->exchange(endpoints_.challenge, endpoints_.response,
                                       rendered.challenge_payload, rendered.deadline);
    Reason absent = Reason::timeout;
    if (record.error && *record.error != TransportError::timeout) absent = Reason::transport_error;
    auto j = judge(record.response, rendered.expected_payload, record.elapsed, rendered.deadline,
                   rendered.expect_strip, absent);
    obs.exchanges.push_back(std::move(record));
    obs.bindings.push_back(std::move(binding));
    if (!j.delta) {
      obs.delta = false;
      if (obs.reason == Reason::none) obs.reason = j.reason;
    }
  }
  return obs;
}

TestOutcome run_test(const TestPlan& plan, const Database& db, SubTestExecutor& executor,
                     ObservationCache* cache) {
  TestOutcome out;
  out.version = plan.version;
  out.delta = true;
  for (const auto& step : plan.steps) {
    const auto* test = db.entry(step.version);
    if (!test || !test->has_intrinsic()) {
      throw std::logic_error("plan step '" + step.version.raw() + "' has no intrinsic test");
    }
    SubOutcome sub{step.version, step.polarity, false, Reason::none, false};
    const Observation* obs = nullptr;
    Observation fresh;
    if (cache) {
      if (auto it = cache->find(step.version); it != cache->end()) {
        obs = &it->second;
        sub.reused = true;
      }
    }
    if (!obs) {
      fresh = executor.execute(db, *test);
      for (const auto& r : fresh.exchanges) out.exchanges.push_back(r);
      if (cache) {
        obs = &cache->emplace(step.version, std::move(fresh)).first->second;
      } else {
        obs = &fresh;
      }
    }
    sub.observed = obs->delta;
    sub.reason = obs->reason;
    out.sub_outcomes.push_back(sub);
    if (!sub.satisfied()) {
      out.delta = false;
      break;
    }
  }
  return out;
}

TestOutcome run_test(const TestPlan& plan, const Endpoints& endpoints, RandomnessSource& rng,
                     const Database& db, Transport& transport) {
  DirectExecutor executor(transport, endpoints, rng);
  return run_test(plan, db, executor);
}

std::vector<TestOutcome> repeat_test(const TestPlan& plan, const Endpoints& endpoints,
                                     RandomnessSource& rng, const Database& db,
                                     Transport& transport, std::size_t n) {
  if (n == 0) throw std::invalid_argument("repeat count must be at least 1");
  std::vector<TestOutcome> runs;
  runs.reserve(n);
  DirectExecutor executor(transport, endpoints, rng);
  for (std::size_t i = 0; i < n; ++i) runs.push_back(run_test(plan, db, executor));
  return runs;
}

bool all_agree(const std::vector<TestOutcome>& runs) {
  return std::all_of(runs.begin(), runs.end(), [](const TestOutcome& t) { return t.delta; });
}

}  // namespace rfp
