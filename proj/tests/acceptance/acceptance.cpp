// Acceptance runner: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "rfp/orfp.hpp"
#include "rfp/strategy.hpp"
#include "rfp/verdict.hpp"
#include "support.hpp"

using namespace rfp;
using namespace std::chrono;

namespace {

// Pinned limits.
constexpr auto kFakerRuntime = seconds(5);
constexpr auto kTrialRuntime = seconds(60);
constexpr int kTrials = 200;
constexpr int kCacheAudits = 100;
constexpr int kCacheMinFailures = 99;
constexpr int kProxyTrials = 100;
constexpr int kOrderTriples = 10000;
constexpr std::size_t kOrfpMinRounds = 5;

struct Check {
  bool ok = true;
  std::ostringstream note;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) note << what;
    ok = ok && cond;
  }
};

Version V(const char* s) { return Version::parse(s); }

struct Fixture {
  Database db = testing::load_db("data/php-mini/database.json");
  sim::SimulatorConfig honest = testing::load_sim("data/php-mini/simulator.json");
  sim::SimulatorConfig faker = testing::load_sim("data/php-mini/faker.json");
  sim::SimulatorConfig proxy = testing::load_sim("data/php-mini/proxy.json");
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

// 1
void faker_defeat(Check& c) {
  auto& f = fixture();
  auto start = steady_clock::now();
  Transport transport;
  transport.register_loopback("p", sim::produce(f.faker.family, *f.faker.provider));
  auto claim = transport.probe_version_claim({"p", EndpointKind::loopback_sim, "p"});
  c.require(claim == "20.9.85-car", "claim probe returned '" + claim + "'. ");
  for (auto kind : {StrategyKind::CBS, StrategyKind::HMSU}) {
    auto a = testing::audit_sim(f.db, f.faker.family, *f.faker.provider, kind, 11);
    auto b = testing::audit_sim(f.db, f.faker.family, *f.faker.provider, kind, 11);
    auto report = make_report(a.log, f.db, std::string(to_string(kind)), V("7.3.0rc4"));
    c.require(report.candidates.members == std::vector<Version>{V("7.1.1")},
              std::string(to_string(kind)) + " candidates wrong. ");
    c.require(report.compliant == false, std::string(to_string(kind)) + " reported compliant. ");
    c.require(testing::trace(a.log) == testing::trace(b.log), "not deterministic under seed. ");
  }
  c.require(steady_clock::now() - start < kFakerRuntime, "slower than 5 s. ");
}

// 2
void cbs_walkthrough(Check& c) {
  auto& f = fixture();
  auto r = testing::audit_sim(f.db, f.honest.family, *f.honest.provider, StrategyKind::CBS, 5);
  const auto& rows = r.log.entries();
  const std::vector<std::pair<const char*, bool>> first = {
      {"5.0.0b1", true}, {"7.0.0", true}, {"7.2.0", true}, {"7.3.0rc4", false}};
  c.require(rows.size() >= first.size(), "fewer than four tests. ");
  for (std::size_t i = 0; i < first.size() && i < rows.size(); ++i) {
    c.require(rows[i].version.raw() == first[i].first && rows[i].delta == first[i].second,
              "test " + std::to_string(i + 1) + " was " + rows[i].version.raw() + ". ");
  }
  c.require(r.report.candidates.members == std::vector<Version>{V("7.2.14")}, "final answer wrong. ");
  c.require(rows.size() == 7, "test count " + std::to_string(rows.size()) + " instead of 7. ");
}

// 3
void htl_two_step(Check& c) {
  auto& f = fixture();
  auto r = testing::audit_sim(f.db, f.honest.family, *f.honest.provider, StrategyKind::HTL, 5);
  c.require(testing::trace(r.log) == "7.3.0rc4- 7.2.14+", "trace " + testing::trace(r.log) + ". ");
  c.require(r.log.exchange_count() == 2, "exchanges " + std::to_string(r.log.exchange_count()) + ". ");
}

constexpr StrategyKind kAll[] = {StrategyKind::BS, StrategyKind::CBS, StrategyKind::HTL,
                                 StrategyKind::LTH, StrategyKind::HMSU};

// 4 and 5 share the trials.
void random_trials(Check& agree, Check& oracle) {
  auto start = steady_clock::now();
  std::mt19937_64 pick(2024);
  int disagreements = 0, misses = 0, mismatches = 0;
  for (int t = 0; t < kTrials; ++t) {
    auto s = testing::random_scenario(1000 + static_cast<std::uint64_t>(t));
    const auto& fam = s.db.family();
    auto truth = fam[std::uniform_int_distribution<std::size_t>(0, fam.size() - 1)(pick)];
    std::optional<CandidateSet> first;
    for (auto kind : kAll) {
      // Budget of one pick per family member: the termination bound.
      auto r = testing::audit_sim(s.db, s.sim, sim::SimProviderConfig{truth}, kind,
                                  static_cast<std::uint64_t>(t) * 7 + 1, fam.size());
      if (!r.report.candidates.contains(truth)) ++misses;
      if (!first) first = r.report.candidates;
      if (!(r.report.candidates == *first)) ++disagreements;
      if (!(oracle_candidates(r.log, s.db, *s.sim) == r.report.candidates)) ++mismatches;
    }
  }
  auto took = steady_clock::now() - start;
  agree.require(disagreements == 0, std::to_string(disagreements) + " disagreements. ");
  agree.require(misses == 0, std::to_string(misses) + " candidate sets missed the truth. ");
  agree.require(took < kTrialRuntime, "slower than 60 s. ");
  oracle.require(mismatches == 0, std::to_string(mismatches) + " oracle mismatches. ");
}

// 6
void caching(Check& c) {
  auto& f = fixture();
  const auto src = V("7.2.14");
  Hierarchy h(f.db);
  auto recorded = testing::audit_sim(f.db, f.honest.family, sim::SimProviderConfig{src},
                                     StrategyKind::CBS, 99);
  std::vector<ExchangeRecord> transcript;
  for (const auto& e : recorded.log.entries()) {
    transcript.insert(transcript.end(), e.outcome.exchanges.begin(), e.outcome.exchanges.end());
  }
  sim::SimProviderConfig cacher{src, sim::Cacher::from_records(transcript)};
  int caught = 0;
  for (int i = 0; i < kCacheAudits; ++i) {
    auto r = testing::audit_sim(f.db, f.honest.family, cacher, StrategyKind::CBS,
                                1000 + static_cast<std::uint64_t>(i));
    bool failed = false;
    for (const auto& e : r.log.entries()) {
      for (const auto& sub : e.outcome.sub_outcomes) {
        if (!sub.reused && !sub.observed && h.region(sub.version).contains(src)) failed = true;
      }
    }
    caught += failed;
  }
  c.require(caught >= kCacheMinFailures, "caught " + std::to_string(caught) + "/100. ");
}

// 7
void proxy(Check& c) {
  auto& f = fixture();
  int timed = 0, failed = 0;
  for (int i = 0; i < kProxyTrials; ++i) {
    auto r = testing::audit_sim(f.db, f.proxy.family, *f.proxy.provider, StrategyKind::CBS,
                                static_cast<std::uint64_t>(i) + 1);
    for (const auto& e : r.log.entries()) {
      for (const auto& sub : e.outcome.sub_outcomes) {
        if (sub.reused) continue;
        ++timed;
        failed += !sub.observed && sub.reason == Reason::timeout;
      }
    }
  }
  c.require(timed > 0, "no timed tests ran. ");
  c.require(failed == timed, std::to_string(failed) + "/" + std::to_string(timed) + " failed. ");
}

// Every intrinsic test once against `responder`.
std::map<Version, bool> intrinsic_results(const Database& db,
                                          std::shared_ptr<LoopbackResponder> responder,
                                          std::uint64_t seed) {
  Transport transport;
  transport.register_loopback("p", std::move(responder));
  InterfaceEndpoint ep{"p", EndpointKind::loopback_sim, "p"};
  auto rng = RandomnessSource::seeded(seed);
  DirectExecutor ex(transport, {ep, ep}, rng);
  std::map<Version, bool> out;
  for (const auto& [v, t] : db.entries()) {
    if (t.has_intrinsic()) out[v] = ex.execute(db, t).delta;
  }
  return out;
}

// 8
void hard_functions(Check& c) {
  auto& f = fixture();
  std::set<std::string> soft;
  for (const auto& fn : f.honest.family->functions()) {
    if (!fn.hard) soft.insert(fn.name);
  }
  c.require(!soft.empty(), "fixture has no non-hard functions. ");
  int flips = 0;
  for (const auto& v : f.db.family()) {
    auto honest = intrinsic_results(
        f.db, sim::produce(f.honest.family, sim::SimProviderConfig{v}), 3);
    auto faked = intrinsic_results(
        f.db, sim::produce(f.honest.family, sim::SimProviderConfig{v, sim::FunctionFaker{soft}}), 3);
    flips += honest != faked;
  }
  c.require(flips == 0, std::to_string(flips) + " versions flipped. ");
  bool rejected = false;
  try {
    sim::produce(f.honest.family, sim::SimProviderConfig{V("7.1.1"), sim::FunctionFaker{{"unserialize"}}});
  } catch (const sim::SimConfigError&) {
    rejected = true;
  }
  c.require(rejected, "faking a hard function was accepted. ");
}

// 9: case tables written out for the fixture, independent of the hierarchy
// module.
void case_tables(Check& c) {
  auto& f = fixture();
  const std::map<std::string, std::string> branched = {
      {"7.0.15", "7.1.1"}, {"7.0.22", "7.1.2"}, {"7.1.21", "7.2.9"}};
  const std::map<std::string, std::string> deprecated = {{"7.0.26", "7.1.0"}};
  auto expected = [&](const Version& w, const Version& v) {
    if (auto b = branched.find(w.raw()); b != branched.end()) {
      return (line_of(v) == line_of(w) && !(v < w)) || !(v < V(b->second.c_str()));
    }
    if (auto d = deprecated.find(w.raw()); d != deprecated.end()) {
      return !(v < w) && v < V(d->second.c_str());
    }
    return !(v < w);
  };
  int wrong = 0, pairs = 0, fork_cases = 0, window_cases = 0;
  for (const auto& v : f.db.family()) {
    Transport transport;
    transport.register_loopback("p", sim::produce(f.honest.family, sim::SimProviderConfig{v}));
    InterfaceEndpoint ep{"p", EndpointKind::loopback_sim, "p"};
    auto rng = RandomnessSource::seeded(17);
    for (const auto& w : f.db.family()) {
      auto plan = resolve_plan(f.db, w);
      if (plan.empty()) continue;
      auto outcome = run_test(plan, {ep, ep}, rng, f.db, transport);
      ++pairs;
      if (outcome.delta != expected(w, v)) {
        ++wrong;
        if (wrong == 1) c.note << "(" << v.raw() << ", " << w.raw() << ") ";
      }
      if (branched.count(w.raw()) && line_of(v) != line_of(w) && !(v < w)) ++fork_cases;
      if (deprecated.count(w.raw()) && !(v < w)) ++window_cases;
    }
  }
  c.require(wrong == 0, std::to_string(wrong) + "/" + std::to_string(pairs) + " pairs differ. ");
  c.require(fork_cases > 0 && window_cases > 0, "branch fork or deprecated window not covered. ");
}

// 10
void order_laws(Check& c) {
  std::mt19937_64 g(10);
  auto random_version = [&] {
    auto n = [&](int hi) { return static_cast<std::uint32_t>(std::uniform_int_distribution<int>(0, hi)(g)); };
    std::optional<PreRelease> pre;
    switch (n(3)) {
      case 0: pre = PreRelease{PreStage::alpha, n(2) + 1}; break;
      case 1: pre = PreRelease{PreStage::beta, n(2) + 1}; break;
      case 2: pre = PreRelease{PreStage::rc, n(2) + 1}; break;
      default: break;
    }
    return Version(n(3), n(3), n(3), pre);
  };
  int bad = 0;
  for (int i = 0; i < kOrderTriples; ++i) {
    auto a = random_version(), b = random_version(), d = random_version();
    int rel = (a < b) + (a == b) + (b < a);
    if (rel != 1) ++bad;
    if (!(a < b) && !(b < a) && !(a == b)) ++bad;
    if (a < b && b < a) ++bad;
    if (a < b && b < d && !(a < d)) ++bad;
    if (!(a < b) && !(b < d) && a < d) ++bad;
  }
  c.require(bad == 0, std::to_string(bad) + " law violations. ");
  c.require(Version(7, 1, 21) < Version(7, 2, 0), "(7,1,21) < (7,2,0) does not hold. ");
}

// 11
void orfp_end_to_end(Check& c) {
  auto& f = fixture();
  orfp::Session session(f.db.family(), sim::produce(f.honest.family, *f.honest.provider),
                        orfp::Session::Options{42});
  orfp::OrfpExecutor ex(session);
  auto log = run_audit(f.db, StrategyKind::CBS, ex);
  auto logs = session.logs();
  auto keys = session.keys();
  c.require(logs.auditor->size() >= kOrfpMinRounds, "fewer than five rounds. ");

  // Through the on-disk format and back.
  orfp::PartyLogs parsed{orfp::decode_auditor_log(orfp::encode_log(*logs.auditor)),
                         orfp::decode_user_log(orfp::encode_log(*logs.user)),
                         orfp::decode_provider_log(orfp::encode_log(*logs.provider))};
  orfp::VerifyOptions opts;
  opts.db = &f.db;
  auto clean = orfp::verify_liability(parsed, keys, opts);
  c.require(clean.all_compliant(), "honest logs do not verify. ");
  auto candidates_live = make_report(log, f.db, "CBS", std::nullopt).candidates;
  c.require(candidates_live.members == std::vector<Version>{V("7.2.14")}, "ORFP audit answer wrong. ");

  auto flip = [](std::string& s) {
    if (s.empty()) {
      s = "x";
    } else {
      s[s.size() / 2] = static_cast<char>(s[s.size() / 2] ^ 0x01);
    }
  };
  auto flip_sig = [](orfp::Signature& sig) { sig[5] ^= 0x40; };
  const std::size_t r = 2;  // corrupt the third round

  struct Fault {
    std::string name;
    orfp::Role owner;
    std::function<void(orfp::PartyLogs&)> apply;
  };
  std::vector<Fault> faults = {
      {"auditor.round", orfp::Role::auditor, [&](auto& l) { (*l.auditor)[r].round += 100; }},
      {"auditor.c", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].c); }},
      {"auditor.phi", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].phi); }},
      {"auditor.e_prime", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].e_prime); }},
      {"auditor.t1", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].t1); }},
      {"auditor.t2", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].t2); }},
      {"auditor.t3", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].t3); }},
      {"auditor.t4", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].t4); }},
      {"auditor.s1", orfp::Role::auditor, [&](auto& l) { flip_sig((*l.auditor)[r].s1); }},
      {"auditor.s2", orfp::Role::auditor, [&](auto& l) { flip_sig((*l.auditor)[r].s2); }},
      {"auditor.s3", orfp::Role::auditor, [&](auto& l) { flip_sig((*l.auditor)[r].s3); }},
      {"auditor.s4", orfp::Role::auditor, [&](auto& l) { flip_sig((*l.auditor)[r].s4); }},
      {"auditor.expected", orfp::Role::auditor, [&](auto& l) { flip((*l.auditor)[r].expected); }},
      {"auditor.delta", orfp::Role::auditor, [&](auto& l) { (*l.auditor)[r].delta = !(*l.auditor)[r].delta; }},
      {"user.round", orfp::Role::user, [&](auto& l) { (*l.user)[r].round += 100; }},
      {"user.c", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].c); }},
      {"user.phi", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].phi); }},
      {"user.e_prime", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].e_prime); }},
      {"user.t2", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].t2); }},
      {"user.t3", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].t3); }},
      {"user.t4", orfp::Role::user, [&](auto& l) { flip((*l.user)[r].t4); }},
      {"user.s2", orfp::Role::user, [&](auto& l) { flip_sig((*l.user)[r].s2); }},
      {"user.s3", orfp::Role::user, [&](auto& l) { flip_sig((*l.user)[r].s3); }},
      {"user.s4", orfp::Role::user, [&](auto& l) { flip_sig((*l.user)[r].s4); }},
      {"user.missing", orfp::Role::user, [&](auto& l) { l.user->erase(l.user->begin() + r); }},
      {"provider.round", orfp::Role::provider, [&](auto& l) { (*l.provider)[r].round += 100; }},
      {"provider.c_prime", orfp::Role::provider, [&](auto& l) { flip((*l.provider)[r].c_prime); }},
      {"provider.e_prime", orfp::Role::provider, [&](auto& l) { flip((*l.provider)[r].e_prime); }},
      {"provider.t3", orfp::Role::provider, [&](auto& l) { flip((*l.provider)[r].t3); }},
      {"provider.s2", orfp::Role::provider, [&](auto& l) { flip_sig((*l.provider)[r].s2); }},
      {"provider.s3", orfp::Role::provider, [&](auto& l) { flip_sig((*l.provider)[r].s3); }},
      {"provider.missing", orfp::Role::provider, [&](auto& l) { l.provider->erase(l.provider->begin() + r); }},
  };
  int correct = 0;
  for (const auto& fault : faults) {
    auto corrupted = parsed;
    fault.apply(corrupted);
    auto rep = orfp::verify_liability(corrupted, keys, opts);
    int blamed = !rep.auditor.compliant + !rep.user.compliant + !rep.provider.compliant;
    bool owner_blamed = (fault.owner == orfp::Role::auditor && !rep.auditor.compliant) ||
                        (fault.owner == orfp::Role::user && !rep.user.compliant) ||
                        (fault.owner == orfp::Role::provider && !rep.provider.compliant);
    if (owner_blamed && blamed == 1) {
      ++correct;
    } else {
      c.note << fault.name << " ";
    }
  }
  c.require(correct == static_cast<int>(faults.size()),
            std::to_string(correct) + "/" + std::to_string(faults.size()) + " faults attributed. ");
}

// 12
void database_round_trip(Check& c) {
  for (const char* path : {"data/php-mini/database.json", "tests/fixtures/listing2.json"}) {
    auto text = testing::read_file(testing::source_path(path));
    auto db = load_database(text);
    auto once = serialize_database(db);
    auto again = load_database(once);
    c.require(again == db, std::string(path) + " does not reload identically. ");
    c.require(serialize_database(again) == once, std::string(path) + " serialization unstable. ");
  }
  auto expect_error = [&](const char* path, DatabaseErrorKind kind, const std::string& mention) {
    try {
      load_database(testing::read_file(testing::source_path(path)));
      c.require(false, std::string(path) + " was accepted. ");
    } catch (const DatabaseError& e) {
      c.require(e.kind() == kind, std::string(path) + " rejected as " +
                                      std::string(to_string(e.kind())) + ". ");
      c.require(std::string(e.what()).find(mention) != std::string::npos,
                std::string(path) + " diagnostic lacks '" + mention + "'. ");
    }
  };
  expect_error("tests/fixtures/dangling.json", DatabaseErrorKind::dangling_referral, "9.9.9");
  expect_error("tests/fixtures/cycle.json", DatabaseErrorKind::cycle, "7.1.5");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Check check;
  };
  std::vector<Criterion> cs;
  const char* names[] = {"faker defeat",          "CBS walkthrough",
                         "HTL two-step",          "strategy agreement",
                         "oracle equivalence",    "caching soundness",
                         "proxy soundness",       "hard-function boundary",
                         "hierarchy case tables", "version-order laws",
                         "ORFP end-to-end",       "database round-trip and validation"};
  for (int i = 0; i < 12; ++i) cs.push_back({i + 1, names[i], {}});

  auto guarded = [](Check& c, const std::function<void(Check&)>& fn) {
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
  };
  guarded(cs[0].check, faker_defeat);
  guarded(cs[1].check, cbs_walkthrough);
  guarded(cs[2].check, htl_two_step);
  try {
    random_trials(cs[3].check, cs[4].check);
  } catch (const std::exception& e) {
    cs[3].check.require(false, std::string("exception: ") + e.what());
    cs[4].check.require(false, std::string("exception: ") + e.what());
  }
  guarded(cs[5].check, caching);
  guarded(cs[6].check, proxy);
  guarded(cs[7].check, hard_functions);
  guarded(cs[8].check, case_tables);
  guarded(cs[9].check, order_laws);
  guarded(cs[10].check, orfp_end_to_end);
  guarded(cs[11].check, database_round_trip);

  bool all = true;
  for (auto& c : cs) {
    std::cout << (c.check.ok ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name;
    if (!c.check.ok) std::cout << ": " << c.check.note.str();
    std::cout << "\n";
    all = all && c.check.ok;
  }
  return all ? 0 : 1;
}
