#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfp/protocol.hpp"

// Outsourced audits: a user holds the randomness and the provider
// credentials, an auditor holds the database and strategy, and every message
// of a round is bound to the previous one by signatures S1..S4. Each party
// keeps its own append-only log; verify_liability replays them.
namespace rfp::orfp {

enum class Role { user, auditor, provider };
std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

using PublicKey = std::array<unsigned char, 32>;
using Signature = std::array<unsigned char, 64>;

// Ed25519 key pair.
class PartyIdentity {
 public:
  static PartyIdentity generate(Role role);
  // Deterministic keys for tests.
  static PartyIdentity from_seed(Role role, const std::array<unsigned char, 32>& seed);

  Role role() const noexcept { return role_; }
  const PublicKey& public_key() const noexcept { return public_key_; }
  Signature sign(std::string_view message) const;

 private:
  PartyIdentity(Role role) : role_(role) {}
  Role role_;
  PublicKey public_key_{};
  std::array<unsigned char, 64> secret_key_{};
};

bool verify_signature(const PublicKey& key, std::string_view message, const Signature& sig);

struct PublicKeys {
  PublicKey user{};
  PublicKey auditor{};
  PublicKey provider{};
};

// Signed byte strings; see docs/orfp.md for the layout.
std::string s1_message(std::uint64_t round, std::string_view c, std::string_view t1);
std::string s2_message(std::uint64_t round, std::string_view phi, std::string_view t2,
                       const Signature& s1);
std::string s3_message(std::uint64_t round, std::string_view e, std::string_view t3,
                       const Signature& s2);
std::string s4_message(std::uint64_t round, std::string_view t4);

// The auditor's challenge c: one intrinsic test with its variables left
// open. Serialized as compact JSON with a fixed key order.
struct ChallengeDoc {
  std::string test;
  std::string challenge;  // tags already applied
  std::string expect;
  std::vector<VariableSpec> variables;
  std::chrono::microseconds deadline{0};
  Wrap strip;

  static ChallengeDoc from_test(const Database& db, const VersionTest& test);
  std::string encode() const;
  static ChallengeDoc decode(std::string_view text);

  std::string altered(const Binding& phi) const;   // c' = c(phi)
  std::string expected(const Binding& phi) const;
};

std::string encode_binding(const Binding& phi);
Binding decode_binding(std::string_view text);

struct ProviderEntry {
  std::uint64_t round = 0;
  std::string c_prime;
  std::string e_prime;
  std::string t3;
  Signature s2{};
  Signature s3{};
};

// Rounds the provider did not answer have empty e', t3 and S3 in the user
// and auditor logs and no provider entry.
struct UserEntry {
  std::uint64_t round = 0;
  std::string c;
  std::string phi;
  std::string e_prime;
  std::string t2, t3, t4;
  Signature s2{}, s3{}, s4{};
};

struct AuditorEntry {
  std::uint64_t round = 0;
  std::string c;
  std::string phi;
  std::string e_prime;
  std::string t1, t2, t3, t4;
  Signature s1{}, s2{}, s3{}, s4{};
  // What the auditor derived from (c, phi) and the timestamps.
  std::string expected;
  bool delta = false;
  Reason reason = Reason::none;
};

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One JSON object per line, signatures in base64.
std::string encode_entry(const ProviderEntry& e);
std::string encode_entry(const UserEntry& e);
std::string encode_entry(const AuditorEntry& e);

struct PartyLogs {
  std::optional<std::vector<AuditorEntry>> auditor;
  std::optional<std::vector<UserEntry>> user;
  std::optional<std::vector<ProviderEntry>> provider;
};

template <class Entry>
std::string encode_log(const std::vector<Entry>& log) {
  std::string out;
  for (const auto& e : log) out += encode_entry(e) + "\n";
  return out;
}

std::vector<AuditorEntry> decode_auditor_log(std::string_view ndjson);
std::vector<UserEntry> decode_user_log(std::string_view ndjson);
std::vector<ProviderEntry> decode_provider_log(std::string_view ndjson);

// The role is taken from a "role" member of the first entry.
Role detect_log_role(std::string_view ndjson);

std::string encode_public_keys(const PublicKeys& keys);
PublicKeys decode_public_keys(std::string_view json);

using Clock = std::function<TimePoint()>;
// Lets time pass: sleeps in real deployments, advances a virtual clock in
// simulations.
using Wait = std::function<void(std::chrono::microseconds)>;

// Aborted round: a signature failed or time ran backwards.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(Role blamed, const std::string& message)
      : std::runtime_error(message), blamed_(blamed) {}
  Role blamed() const noexcept { return blamed_; }

 private:
  Role blamed_;
};

// Absent e' means the provider stayed silent and signed nothing.
struct ProviderResponse {
  std::optional<std::string> e_prime;
  std::string t3;
  Signature s3{};
  std::chrono::microseconds latency{0};
};

class ProviderParty {
 public:
  ProviderParty(PartyIdentity id, std::shared_ptr<LoopbackResponder> responder, Clock clock,
                Wait wait);
  ProviderResponse handle(std::uint64_t round, const std::string& c_prime, const Signature& s2,
                          std::chrono::microseconds give_up);
  const std::vector<ProviderEntry>& log() const noexcept { return log_; }
  const PartyIdentity& identity() const noexcept { return id_; }

 private:
  PartyIdentity id_;
  std::shared_ptr<LoopbackResponder> responder_;
  Clock clock_;
  Wait wait_;
  std::vector<ProviderEntry> log_;
};

struct UserReport {
  std::string phi;
  std::string e_prime;
  std::string t2, t3, t4;
  Signature s2{}, s3{}, s4{};
  // False when the provider stayed silent; t3 and s3 are then empty.
  bool answered = true;
};

class UserParty {
 public:
  UserParty(PartyIdentity id, PublicKeys keys, VersionSet family, RandomnessSource rng,
            Clock clock);
  // Draws phi, forwards c' to the provider and reports back.
  UserReport run_round(std::uint64_t round, const std::string& c, const std::string& t1,
                       const Signature& s1, ProviderParty& provider);
  const std::vector<UserEntry>& log() const noexcept { return log_; }
  const PartyIdentity& identity() const noexcept { return id_; }
  // Misbehaving-user switch for tests: reuse this phi every round.
  void replay_phi(std::optional<Binding> phi) { fixed_phi_ = std::move(phi); }

 private:
  PartyIdentity id_;
  PublicKeys keys_;
  VersionSet family_;
  RandomnessSource rng_;
  Clock clock_;
  std::optional<Binding> fixed_phi_;
  std::vector<UserEntry> log_;
};

class AuditorParty {
 public:
  AuditorParty(PartyIdentity id, PublicKeys keys, Clock clock, std::size_t repeat_alarm = 3,
               std::chrono::microseconds skew = std::chrono::seconds(2));

  struct Issued {
    std::uint64_t round;
    std::string c;
    std::string t1;
    Signature s1;
  };
  Issued issue(const ChallengeDoc& doc);
  // Verifies the returned chain, judges e' and logs the round.
  AuditorEntry conclude(const Issued& issued, const UserReport& report);

  const std::vector<AuditorEntry>& log() const noexcept { return log_; }
  const PartyIdentity& identity() const noexcept { return id_; }
  // Set once some phi value has come back repeat_alarm times.
  bool repeated_randomness_alarm() const noexcept { return alarm_; }

 private:
  PartyIdentity id_;
  PublicKeys keys_;
  Clock clock_;
  std::size_t repeat_alarm_;
  std::chrono::microseconds skew_;
  std::uint64_t next_round_ = 1;
  std::map<std::string, std::size_t> phi_counts_;
  bool alarm_ = false;
  std::vector<AuditorEntry> log_;
};

// All three parties in one process. Simulated latency advances a shared
// virtual offset added to every party clock.
class Session {
 public:
  struct Options {
    std::uint64_t seed = 0;  // 0 draws keys and randomness from the OS
    std::size_t repeat_alarm = 3;
    std::chrono::microseconds skew = std::chrono::seconds(2);
    std::chrono::microseconds provider_clock_offset{0};
  };

  Session(VersionSet family, std::shared_ptr<LoopbackResponder> provider, Options options);

  AuditorEntry round(const ChallengeDoc& doc);

  PublicKeys keys() const;
  PartyLogs logs() const;
  AuditorParty& auditor() { return *auditor_; }
  UserParty& user() { return *user_; }
  ProviderParty& provider() { return *provider_; }

 private:
  struct VirtualTime;
  std::shared_ptr<VirtualTime> time_;
  std::unique_ptr<ProviderParty> provider_;
  std::unique_ptr<UserParty> user_;
  std::unique_ptr<AuditorParty> auditor_;
};

// Lets run_audit drive a session: every intrinsic test becomes one round.
class OrfpExecutor : public SubTestExecutor {
 public:
  explicit OrfpExecutor(Session& session) : session_(&session) {}
  Observation execute(const Database& db, const VersionTest& test) override;

 private:
  Session* session_;
};

struct PartyVerdict {
  Role role = Role::user;
  bool supplied = false;
  bool compliant = true;
  std::optional<std::uint64_t> round;
  std::string reason;
};

struct LiabilityReport {
  PartyVerdict auditor{Role::auditor};
  PartyVerdict user{Role::user};
  PartyVerdict provider{Role::provider};
  bool all_compliant() const {
    return auditor.compliant && user.compliant && provider.compliant;
  }
};

struct VerifyOptions {
  std::chrono::microseconds skew = std::chrono::seconds(2);
  // When given, every c must match the database's test for its label.
  const Database* db = nullptr;
};

// Re-checks every signature and timestamp order in each supplied log,
// recomputes the auditor's expected responses and verdicts, and compares the
// fields the logs share. A party is blamed for the first round in which its
// own log does not hold up or contradicts another party's authenticated
// record.
LiabilityReport verify_liability(const PartyLogs& logs, const PublicKeys& keys,
                                 const VerifyOptions& options = {});

}  // namespace rfp::orfp
