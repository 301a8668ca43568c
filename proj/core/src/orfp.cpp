#include "rfp/orfp.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sodium_init.hpp"

namespace rfp::orfp {

using json = nlohmann::ordered_json;
using namespace std::chrono;

namespace {

constexpr std::string_view kDomain = "rfp-orfp/1";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_field(std::string& out, std::string_view bytes) {
  auto n = static_cast<std::uint32_t>(bytes.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xff));
  out.append(bytes);
}

std::string_view bytes_of(const Signature& s) {
  return {reinterpret_cast<const char*>(s.data()), s.size()};
}

std::string header(std::string_view which, std::uint64_t round) {
  std::string out;
  put_field(out, kDomain);
  put_field(out, which);
  put_u64(out, round);
  return out;
}

std::string b64(const unsigned char* data, std::size_t n) {
  detail::ensure_sodium();
  std::string out(sodium_base64_ENCODED_LEN(n, sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), data, n, sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.size() - 1);
  return out;
}

template <std::size_t N>
std::array<unsigned char, N> unb64(const std::string& text, const char* field) {
  detail::ensure_sodium();
  std::array<unsigned char, N> out{};
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      len != N) {
    throw LogFormatError(std::string("field '") + field + "' is not a base64 value of " +
                         std::to_string(N) + " bytes");
  }
  return out;
}

bool verify(const PublicKey& key, const std::string& msg, const Signature& sig) {
  return verify_signature(key, msg, sig);
}

std::optional<TimePoint> time_of(const std::string& s) { return parse_rfc3339(s); }

microseconds span(TimePoint from, TimePoint to) { return duration_cast<microseconds>(to - from); }

json parse_line(std::string_view line) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw LogFormatError("log line is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw LogFormatError(std::string("log line is not valid JSON: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw LogFormatError(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw LogFormatError(std::string("field '") + name + "' has the wrong type");
  }
}

Signature sig_field(const json& j, const char* name) {
  auto text = field<std::string>(j, name);
  if (text.empty()) return Signature{};
  return unb64<64>(text, name);
}

std::string sig_text(const Signature& s) {
  if (s == Signature{}) return "";
  return b64(s.data(), s.size());
}

template <class Fn>
auto decode_lines(std::string_view ndjson, Fn fn) {
  std::vector<decltype(fn(json{}))> out;
  std::istringstream in{std::string(ndjson)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(fn(parse_line(line)));
  }
  return out;
}

std::set<std::string> declared(const std::vector<VariableSpec>& vars) {
  std::set<std::string> out;
  for (const auto& v : vars) out.insert(v.name);
  return out;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::user: return "user";
    case Role::auditor: return "auditor";
    case Role::provider: return "provider";
  }
  return "";
}

std::optional<Role> parse_role(std::string_view text) {
  for (auto r : {Role::user, Role::auditor, Role::provider}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

PartyIdentity PartyIdentity::generate(Role role) {
  detail::ensure_sodium();
  PartyIdentity id(role);
  crypto_sign_keypair(id.public_key_.data(), id.secret_key_.data());
  return id;
}

PartyIdentity PartyIdentity::from_seed(Role role, const std::array<unsigned char, 32>& seed) {
  detail::ensure_sodium();
  PartyIdentity id(role);
  crypto_sign_seed_keypair(id.public_key_.data(), id.secret_key_.data(), seed.data());
  return id;
}

Signature PartyIdentity::sign(std::string_view message) const {
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, reinterpret_cast<const unsigned char*>(message.data()),
                       message.size(), secret_key_.data());
  return sig;
}

bool verify_signature(const PublicKey& key, std::string_view message, const Signature& sig) {
  detail::ensure_sodium();
  return crypto_sign_verify_detached(sig.data(),
                                     reinterpret_cast<const unsigned char*>(message.data()),
                                     message.size(), key.data()) == 0;
}

std::string s1_message(std::uint64_t round, std::string_view c, std::string_view t1) {
  auto out = header("S1", round);
  put_field(out, c);
  put_field(out, t1);
  return out;
}

std::string s2_message(std::uint64_t round, std::string_view phi, std::string_view t2,
                       const Signature& s1) {
  auto out = header("S2", round);
  put_field(out, phi);
  put_field(out, t2);
  put_field(out, bytes_of(s1));
  return out;
}

std::string s3_message(std::uint64_t round, std::string_view e, std::string_view t3,
                       const Signature& s2) {
  auto out = header("S3", round);
  put_field(out, e);
  put_field(out, t3);
  put_field(out, bytes_of(s2));
  return out;
}

std::string s4_message(std::uint64_t round, std::string_view t4) {
  auto out = header("S4", round);
  put_field(out, t4);
  return out;
}

// ---- challenge documents -------------------------------------------------

ChallengeDoc ChallengeDoc::from_test(const Database& db, const VersionTest& test) {
  if (!test.challenge_template) {
    throw std::invalid_argument("'" + test.version.raw() + "' has no intrinsic test");
  }
  ChallengeDoc d;
  d.test = test.version.raw();
  d.challenge = *test.challenge_template;
  if (test.challenge_tags.start) d.challenge = db.challenge_start_tag() + d.challenge;
  if (test.challenge_tags.end) d.challenge += db.challenge_end_tag();
  d.expect = test.expect_template;
  for (const auto& [name, spec] : test.variables) d.variables.push_back(spec);
  d.deadline = test.wait_time;
  if (test.expect_tags.start) d.strip.prefix = db.expect_start_tag();
  if (test.expect_tags.end) d.strip.suffix = db.expect_end_tag();
  return d;
}

std::string ChallengeDoc::encode() const {
  json j;
  j["test"] = test;
  j["challenge"] = challenge;
  j["expect"] = expect;
  j["variables"] = json::array();
  for (const auto& v : variables) {
    j["variables"].push_back({{"name", v.name},
                              {"format", std::string(to_string(v.format))},
                              {"min", v.min},
                              {"max", v.max},
                              {"length", v.length}});
  }
  j["deadline_us"] = deadline.count();
  j["strip"] = {strip.prefix, strip.suffix};
  return j.dump();
}

ChallengeDoc ChallengeDoc::decode(std::string_view text) {
  auto j = parse_line(text);
  ChallengeDoc d;
  d.test = field<std::string>(j, "test");
  d.challenge = field<std::string>(j, "challenge");
  d.expect = field<std::string>(j, "expect");
  for (const auto& v : field<json>(j, "variables")) {
    VariableSpec spec;
    spec.name = field<std::string>(v, "name");
    auto format = parse_variable_format(field<std::string>(v, "format"));
    if (!format) throw LogFormatError("unknown variable format in challenge");
    spec.format = *format;
    spec.min = field<std::int64_t>(v, "min");
    spec.max = field<std::int64_t>(v, "max");
    spec.length = field<std::uint32_t>(v, "length");
    d.variables.push_back(spec);
  }
  d.deadline = microseconds(field<std::int64_t>(j, "deadline_us"));
  auto strip = field<std::vector<std::string>>(j, "strip");
  if (strip.size() != 2) throw LogFormatError("challenge 'strip' must have two entries");
  d.strip = {strip[0], strip[1]};
  return d;
}

std::string ChallengeDoc::altered(const Binding& phi) const {
  return render(challenge, phi, declared(variables));
}

std::string ChallengeDoc::expected(const Binding& phi) const {
  return render(expect, phi, declared(variables));
}

std::string encode_binding(const Binding& phi) {
  json j = json::object();
  for (const auto& [k, v] : phi) j[k] = v;
  return j.dump();
}

Binding decode_binding(std::string_view text) {
  auto j = parse_line(text);
  Binding b;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) throw LogFormatError("phi values must be strings");
    b[it.key()] = it.value().get<std::string>();
  }
  return b;
}

// ---- log lines -------------------------------------------------------------

std::string encode_entry(const ProviderEntry& e) {
  json j;
  j["role"] = "provider";
  j["round"] = e.round;
  j["c_prime"] = e.c_prime;
  j["e_prime"] = e.e_prime;
  j["t3"] = e.t3;
  j["s2"] = sig_text(e.s2);
  j["s3"] = sig_text(e.s3);
  return j.dump();
}

std::string encode_entry(const UserEntry& e) {
  json j;
  j["role"] = "user";
  j["round"] = e.round;
  j["c"] = e.c;
  j["phi"] = e.phi;
  j["e_prime"] = e.e_prime;
  j["t2"] = e.t2;
  j["t3"] = e.t3;
  j["t4"] = e.t4;
  j["s2"] = sig_text(e.s2);
  j["s3"] = sig_text(e.s3);
  j["s4"] = sig_text(e.s4);
  return j.dump();
}

std::string encode_entry(const AuditorEntry& e) {
  json j;
  j["role"] = "auditor";
  j["round"] = e.round;
  j["c"] = e.c;
  j["phi"] = e.phi;
  j["e_prime"] = e.e_prime;
  j["t1"] = e.t1;
  j["t2"] = e.t2;
  j["t3"] = e.t3;
  j["t4"] = e.t4;
  j["s1"] = sig_text(e.s1);
  j["s2"] = sig_text(e.s2);
  j["s3"] = sig_text(e.s3);
  j["s4"] = sig_text(e.s4);
  j["expected"] = e.expected;
  j["delta"] = e.delta;
  j["reason"] = std::string(to_string(e.reason));
  return j.dump();
}

namespace {

void expect_role(const json& j, std::string_view role) {
  if (field<std::string>(j, "role") != role) {
    throw LogFormatError("entry of role '" + field<std::string>(j, "role") + "' in a " +
                         std::string(role) + " log");
  }
}

Reason parse_reason(const std::string& text) {
  for (auto r : {Reason::none, Reason::mismatch, Reason::timeout, Reason::transport_error}) {
    if (text == to_string(r)) return r;
  }
  throw LogFormatError("unknown reason '" + text + "'");
}

}  // namespace

std::vector<AuditorEntry> decode_auditor_log(std::string_view ndjson) {
  return decode_lines(ndjson, [](const json& j) {
    expect_role(j, "auditor");
    AuditorEntry e;
    e.round = field<std::uint64_t>(j, "round");
    e.c = field<std::string>(j, "c");
    e.phi = field<std::string>(j, "phi");
    e.e_prime = field<std::string>(j, "e_prime");
    e.t1 = field<std::string>(j, "t1");
    e.t2 = field<std::string>(j, "t2");
    e.t3 = field<std::string>(j, "t3");
    e.t4 = field<std::string>(j, "t4");
    e.s1 = sig_field(j, "s1");
    e.s2 = sig_field(j, "s2");
    e.s3 = sig_field(j, "s3");
    e.s4 = sig_field(j, "s4");
    e.expected = field<std::string>(j, "expected");
    e.delta = field<bool>(j, "delta");
    e.reason = parse_reason(field<std::string>(j, "reason"));
    return e;
  });
}

std::vector<UserEntry> decode_user_log(std::string_view ndjson) {
  return decode_lines(ndjson, [](const json& j) {
    expect_role(j, "user");
    UserEntry e;
    e.round = field<std::uint64_t>(j, "round");
    e.c = field<std::string>(j, "c");
    e.phi = field<std::string>(j, "phi");
    e.e_prime = field<std::string>(j, "e_prime");
    e.t2 = field<std::string>(j, "t2");
    e.t3 = field<std::string>(j, "t3");
    e.t4 = field<std::string>(j, "t4");
    e.s2 = sig_field(j, "s2");
    e.s3 = sig_field(j, "s3");
    e.s4 = sig_field(j, "s4");
    return e;
  });
}

std::vector<ProviderEntry> decode_provider_log(std::string_view ndjson) {
  return decode_lines(ndjson, [](const json& j) {
    expect_role(j, "provider");
    ProviderEntry e;
    e.round = field<std::uint64_t>(j, "round");
    e.c_prime = field<std::string>(j, "c_prime");
    e.e_prime = field<std::string>(j, "e_prime");
    e.t3 = field<std::string>(j, "t3");
    e.s2 = sig_field(j, "s2");
    e.s3 = sig_field(j, "s3");
    return e;
  });
}

Role detect_log_role(std::string_view ndjson) {
  std::istringstream in{std::string(ndjson)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto role = parse_role(field<std::string>(parse_line(line), "role"));
    if (!role) throw LogFormatError("unknown role in log");
    return *role;
  }
  throw LogFormatError("empty log");
}

std::string encode_public_keys(const PublicKeys& keys) {
  json j;
  j["user"] = b64(keys.user.data(), keys.user.size());
  j["auditor"] = b64(keys.auditor.data(), keys.auditor.size());
  j["provider"] = b64(keys.provider.data(), keys.provider.size());
  return j.dump(2) + "\n";
}

PublicKeys decode_public_keys(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw LogFormatError(std::string("key file is not valid JSON: ") + e.what());
  }
  PublicKeys k;
  k.user = unb64<32>(field<std::string>(j, "user"), "user");
  k.auditor = unb64<32>(field<std::string>(j, "auditor"), "auditor");
  k.provider = unb64<32>(field<std::string>(j, "provider"), "provider");
  return k;
}

// ---- parties ---------------------------------------------------------------

ProviderParty::ProviderParty(PartyIdentity id, std::shared_ptr<LoopbackResponder> responder,
                             Clock clock, Wait wait)
    : id_(std::move(id)),
      responder_(std::move(responder)),
      clock_(std::move(clock)),
      wait_(std::move(wait)) {}

ProviderResponse ProviderParty::handle(std::uint64_t round, const std::string& c_prime,
                                       const Signature& s2, microseconds give_up) {
  auto reply = responder_->respond(c_prime);
  ProviderResponse r;
  if (!reply.output) {
    wait_(give_up);
    return r;
  }
  // t3 is taken once the request has crossed half of the modelled latency.
  auto inbound = reply.latency / 2;
  wait_(inbound);
  r.e_prime = *reply.output;
  r.t3 = format_rfc3339(clock_());
  r.s3 = id_.sign(s3_message(round, *r.e_prime, r.t3, s2));
  r.latency = reply.latency;
  wait_(reply.latency - inbound);
  log_.push_back({round, c_prime, *r.e_prime, r.t3, s2, r.s3});
  return r;
}

UserParty::UserParty(PartyIdentity id, PublicKeys keys, VersionSet family, RandomnessSource rng,
                     Clock clock)
    : id_(std::move(id)),
      keys_(keys),
      family_(std::move(family)),
      rng_(std::move(rng)),
      clock_(std::move(clock)) {}

UserReport UserParty::run_round(std::uint64_t round, const std::string& c, const std::string& t1,
                                const Signature& s1, ProviderParty& provider) {
  if (!verify(keys_.auditor, s1_message(round, c, t1), s1)) {
    throw ProtocolError(Role::auditor, "S1 does not verify in round " + std::to_string(round));
  }
  ChallengeDoc doc;
  try {
    doc = ChallengeDoc::decode(c);
  } catch (const std::exception& e) {
    throw ProtocolError(Role::auditor, std::string("unreadable challenge: ") + e.what());
  }

  Binding phi;
  if (fixed_phi_) {
    phi = *fixed_phi_;
  } else {
    for (const auto& spec : doc.variables) phi[spec.name] = draw(spec, rng_, &family_);
  }

  UserReport r;
  r.phi = encode_binding(phi);
  r.t2 = format_rfc3339(clock_());
  r.s2 = id_.sign(s2_message(round, r.phi, r.t2, s1));
  auto c_prime = doc.altered(phi);
  auto response = provider.handle(round, c_prime, r.s2, doc.deadline + seconds(1));
  if (response.e_prime) {
    if (!verify(keys_.provider, s3_message(round, *response.e_prime, response.t3, r.s2),
                response.s3)) {
      throw ProtocolError(Role::provider, "S3 does not verify in round " + std::to_string(round));
    }
    r.e_prime = *response.e_prime;
    r.t3 = response.t3;
    r.s3 = response.s3;
  } else {
    r.answered = false;
  }
  r.t4 = format_rfc3339(clock_());
  r.s4 = id_.sign(s4_message(round, r.t4));
  log_.push_back({round, c, r.phi, r.e_prime, r.t2, r.t3, r.t4, r.s2, r.s3, r.s4});
  return r;
}

AuditorParty::AuditorParty(PartyIdentity id, PublicKeys keys, Clock clock,
                           std::size_t repeat_alarm, microseconds skew)
    : id_(std::move(id)),
      keys_(keys),
      clock_(std::move(clock)),
      repeat_alarm_(repeat_alarm),
      skew_(skew) {}

AuditorParty::Issued AuditorParty::issue(const ChallengeDoc& doc) {
  Issued out;
  out.round = next_round_++;
  out.c = doc.encode();
  out.t1 = format_rfc3339(clock_());
  out.s1 = id_.sign(s1_message(out.round, out.c, out.t1));
  return out;
}

AuditorEntry AuditorParty::conclude(const Issued& issued, const UserReport& report) {
  const auto round = issued.round;
  const auto where = " in round " + std::to_string(round);
  if (!verify(keys_.user, s2_message(round, report.phi, report.t2, issued.s1), report.s2)) {
    throw ProtocolError(Role::user, "S2 does not verify" + where);
  }
  if (report.answered &&
      !verify(keys_.provider, s3_message(round, report.e_prime, report.t3, report.s2),
              report.s3)) {
    throw ProtocolError(Role::user, "forwarded S3 does not verify" + where);
  }
  if (!verify(keys_.user, s4_message(round, report.t4), report.s4)) {
    throw ProtocolError(Role::user, "S4 does not verify" + where);
  }

  auto t1 = time_of(issued.t1);
  auto t2 = time_of(report.t2);
  auto t4 = time_of(report.t4);
  if (!t2 || !t4) throw ProtocolError(Role::user, "malformed timestamp" + where);
  if (*t4 < *t2) throw ProtocolError(Role::user, "t4 precedes t2" + where);
  if (*t2 + skew_ < *t1) throw ProtocolError(Role::user, "t2 precedes t1" + where);
  if (report.answered) {
    auto t3 = time_of(report.t3);
    if (!t3) throw ProtocolError(Role::provider, "malformed t3" + where);
    if (*t3 + skew_ < *t2 || *t4 + skew_ < *t3) {
      throw ProtocolError(Role::provider, "t3 outside [t2, t4]" + where);
    }
  }

  if (++phi_counts_[report.phi] >= repeat_alarm_ && repeat_alarm_ > 0) alarm_ = true;

  auto doc = ChallengeDoc::decode(issued.c);
  auto phi = decode_binding(report.phi);
  AuditorEntry e;
  e.round = round;
  e.c = issued.c;
  e.phi = report.phi;
  e.e_prime = report.e_prime;
  e.t1 = issued.t1;
  e.t2 = report.t2;
  e.t3 = report.t3;
  e.t4 = report.t4;
  e.s1 = issued.s1;
  e.s2 = report.s2;
  e.s3 = report.s3;
  e.s4 = report.s4;
  e.expected = doc.expected(phi);
  std::optional<std::string> actual;
  if (report.answered) actual = report.e_prime;
  auto j = judge(actual, e.expected, span(*t2, *t4), doc.deadline, doc.strip);
  e.delta = j.delta;
  e.reason = j.reason;
  log_.push_back(e);
  return e;
}

// ---- in-process session ------------------------------------------------------

struct Session::VirtualTime {
  microseconds offset{0};
  TimePoint now() const { return system_clock::now() + offset; }
};

namespace {

std::array<unsigned char, 32> derive_seed(std::uint64_t seed, Role role) {
  std::array<unsigned char, 32> out{};
  std::string material = "rfp-orfp-key/" + std::string(to_string(role)) + "/" + std::to_string(seed);
  detail::ensure_sodium();
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(material.data()),
                     material.size(), nullptr, 0);
  return out;
}

PartyIdentity make_identity(std::uint64_t seed, Role role) {
  return seed ? PartyIdentity::from_seed(role, derive_seed(seed, role)) : PartyIdentity::generate(role);
}

}  // namespace

Session::Session(VersionSet family, std::shared_ptr<LoopbackResponder> provider, Options options)
    : time_(std::make_shared<VirtualTime>()) {
  auto a = make_identity(options.seed, Role::auditor);
  auto u = make_identity(options.seed, Role::user);
  auto p = make_identity(options.seed, Role::provider);
  PublicKeys keys{u.public_key(), a.public_key(), p.public_key()};

  auto time = time_;
  Clock clock = [time] { return time->now(); };
  auto provider_offset = options.provider_clock_offset;
  Clock provider_clock = [time, provider_offset] { return time->now() + provider_offset; };
  Wait wait = [time](microseconds d) {
    if (d > microseconds{0}) time->offset += d;
  };

  provider_ = std::make_unique<ProviderParty>(std::move(p), std::move(provider), provider_clock, wait);
  auto rng = options.seed ? RandomnessSource::seeded(options.seed) : RandomnessSource::secure();
  user_ = std::make_unique<UserParty>(std::move(u), keys, std::move(family), std::move(rng), clock);
  auditor_ = std::make_unique<AuditorParty>(std::move(a), keys, clock, options.repeat_alarm,
                                            options.skew);
}

AuditorEntry Session::round(const ChallengeDoc& doc) {
  auto issued = auditor_->issue(doc);
  auto report = user_->run_round(issued.round, issued.c, issued.t1, issued.s1, *provider_);
  return auditor_->conclude(issued, report);
}

PublicKeys Session::keys() const {
  return {user_->identity().public_key(), auditor_->identity().public_key(),
          provider_->identity().public_key()};
}

PartyLogs Session::logs() const { return {auditor_->log(), user_->log(), provider_->log()}; }

Observation OrfpExecutor::execute(const Database& db, const VersionTest& test) {
  auto entry = session_->round(ChallengeDoc::from_test(db, test));
  Observation obs;
  obs.delta = entry.delta;
  obs.reason = entry.reason;
  ExchangeRecord rec;
  rec.challenge = entry.c;
  if (!entry.t3.empty()) rec.response = entry.e_prime;
  rec.sent_at = parse_rfc3339(entry.t2).value_or(TimePoint{});
  rec.received_at = parse_rfc3339(entry.t4).value_or(TimePoint{});
  rec.elapsed = span(rec.sent_at, rec.received_at);
  if (!rec.response) rec.error = TransportError::timeout;
  obs.exchanges.push_back(std::move(rec));
  obs.bindings.push_back(decode_binding(entry.phi));
  return obs;
}

// ---- liability -----------------------------------------------------------------

namespace {

void blame(PartyVerdict& v, std::uint64_t round, const std::string& reason) {
  if (!v.compliant) return;
  v.compliant = false;
  v.round = round;
  v.reason = reason;
}

bool ordered(const std::string& earlier, const std::string& later, microseconds slack) {
  auto a = time_of(earlier);
  auto b = time_of(later);
  return a && b && !(*b + slack < *a);
}

template <class Entry>
std::optional<std::uint64_t> non_increasing_round(const std::vector<Entry>& log) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (log[i].round <= log[i - 1].round) return log[i].round;
  }
  return std::nullopt;
}

// Empty when the auditor entry holds up on its own; otherwise why not.
std::string check_auditor(const AuditorEntry& e, const PublicKeys& k, const VerifyOptions& o) {
  const auto r = e.round;
  const bool answered = !e.t3.empty();
  if (!verify(k.auditor, s1_message(r, e.c, e.t1), e.s1)) return "S1 does not verify";
  if (!verify(k.user, s2_message(r, e.phi, e.t2, e.s1), e.s2)) return "S2 does not verify";
  if (answered && !verify(k.provider, s3_message(r, e.e_prime, e.t3, e.s2), e.s3)) {
    return "S3 does not verify";
  }
  if (!answered && (!e.e_prime.empty() || e.s3 != Signature{})) return "response without t3";
  if (!verify(k.user, s4_message(r, e.t4), e.s4)) return "S4 does not verify";
  if (!ordered(e.t2, e.t4, microseconds{0}) || !ordered(e.t1, e.t2, o.skew)) {
    return "timestamps out of order";
  }
  if (answered && (!ordered(e.t2, e.t3, o.skew) || !ordered(e.t3, e.t4, o.skew))) {
    return "timestamps out of order";
  }
  ChallengeDoc doc;
  Binding phi;
  try {
    doc = ChallengeDoc::decode(e.c);
    phi = decode_binding(e.phi);
  } catch (const std::exception&) {
    return "unreadable challenge or randomness";
  }
  if (o.db) {
    auto v = Version::try_parse(doc.test);
    const VersionTest* test = v ? o.db->entry(*v) : nullptr;
    if (!test || !test->challenge_template || ChallengeDoc::from_test(*o.db, *test).encode() != e.c) {
      return "challenge not in the database";
    }
  }
  std::string expected;
  try {
    expected = doc.expected(phi);
  } catch (const std::exception&) {
    return "randomness does not bind the challenge";
  }
  if (expected != e.expected) return "wrong challenge/expected response";
  std::optional<std::string> actual;
  if (answered) actual = e.e_prime;
  auto j = judge(actual, expected, span(*time_of(e.t2), *time_of(e.t4)), doc.deadline, doc.strip);
  if (j.delta != e.delta || j.reason != e.reason) return "recorded result does not follow";
  return "";
}

std::string check_user(const UserEntry& e, const PublicKeys& k, const Signature* s1,
                       const VerifyOptions& o) {
  const auto r = e.round;
  const bool answered = !e.t3.empty();
  if (s1 && !verify(k.user, s2_message(r, e.phi, e.t2, *s1), e.s2)) return "S2 does not verify";
  if (answered && !verify(k.provider, s3_message(r, e.e_prime, e.t3, e.s2), e.s3)) {
    return "S3 does not verify";
  }
  if (!answered && (!e.e_prime.empty() || e.s3 != Signature{})) return "response without t3";
  if (!verify(k.user, s4_message(r, e.t4), e.s4)) return "S4 does not verify";
  if (!ordered(e.t2, e.t4, microseconds{0})) return "timestamps out of order";
  if (answered && (!ordered(e.t2, e.t3, o.skew) || !ordered(e.t3, e.t4, o.skew))) {
    return "timestamps out of order";
  }
  return "";
}

std::string check_provider(const ProviderEntry& e, const PublicKeys& k) {
  if (!verify(k.provider, s3_message(e.round, e.e_prime, e.t3, e.s2), e.s3)) {
    return "S3 does not verify";
  }
  if (!time_of(e.t3)) return "malformed t3";
  return "";
}

template <class Entry>
std::map<std::uint64_t, const Entry*> by_round(const std::optional<std::vector<Entry>>& log) {
  std::map<std::uint64_t, const Entry*> out;
  if (log) {
    for (const auto& e : *log) out.emplace(e.round, &e);
  }
  return out;
}

}  // namespace

LiabilityReport verify_liability(const PartyLogs& logs, const PublicKeys& keys,
                                 const VerifyOptions& options) {
  LiabilityReport rep;
  rep.auditor.supplied = logs.auditor.has_value();
  rep.user.supplied = logs.user.has_value();
  rep.provider.supplied = logs.provider.has_value();

  if (logs.auditor) {
    if (auto r = non_increasing_round(*logs.auditor)) blame(rep.auditor, *r, "round counter not increasing");
  }
  if (logs.user) {
    if (auto r = non_increasing_round(*logs.user)) blame(rep.user, *r, "round counter not increasing");
  }
  if (logs.provider) {
    if (auto r = non_increasing_round(*logs.provider)) blame(rep.provider, *r, "round counter not increasing");
  }

  // Entries that hold up on their own are the reference for cross-checks.
  std::map<std::uint64_t, const AuditorEntry*> good_a;
  for (const auto& [r, e] : by_round(logs.auditor)) {
    auto why = check_auditor(*e, keys, options);
    if (why.empty()) {
      good_a[r] = e;
    } else {
      blame(rep.auditor, r, why);
    }
  }

  std::map<std::uint64_t, const UserEntry*> good_u;
  for (const auto& [r, e] : by_round(logs.user)) {
    auto a = good_a.find(r);
    const Signature* s1 = a == good_a.end() ? nullptr : &a->second->s1;
    auto why = check_user(*e, keys, s1, options);
    if (why.empty() && a != good_a.end()) {
      const auto& x = *a->second;
      if (e->c != x.c) {
        why = "challenge differs from the auditor's signed one";
      } else if (e->phi != x.phi || e->e_prime != x.e_prime || e->t2 != x.t2 || e->t3 != x.t3 ||
                 e->t4 != x.t4 || e->s2 != x.s2 || e->s3 != x.s3 || e->s4 != x.s4) {
        why = "record differs from the auditor's";
      }
    }
    if (why.empty()) {
      good_u[r] = e;
    } else {
      blame(rep.user, r, why);
    }
  }

  std::map<std::uint64_t, const ProviderEntry*> good_p;
  for (const auto& [r, e] : by_round(logs.provider)) {
    auto why = check_provider(*e, keys);
    if (why.empty()) {
      std::optional<std::string> c, phi, e_prime, t3;
      std::optional<Signature> s2;
      if (auto a = good_a.find(r); a != good_a.end()) {
        c = a->second->c, phi = a->second->phi, e_prime = a->second->e_prime;
        t3 = a->second->t3, s2 = a->second->s2;
      } else if (auto u = good_u.find(r); u != good_u.end()) {
        c = u->second->c, phi = u->second->phi, e_prime = u->second->e_prime;
        t3 = u->second->t3, s2 = u->second->s2;
      }
      if (c) {
        std::string expected_c_prime;
        try {
          expected_c_prime = ChallengeDoc::decode(*c).altered(decode_binding(*phi));
        } catch (const std::exception&) {
        }
        if (e->c_prime != expected_c_prime) {
          why = "received challenge differs from c(phi)";
        } else if (e->e_prime != *e_prime || e->t3 != *t3 || e->s2 != *s2) {
          why = "record differs from the user's";
        }
      }
    }
    if (why.empty()) {
      good_p[r] = e;
    } else {
      blame(rep.provider, r, why);
    }
  }

  // A round one log has and another lacks: the lacking party signed for it.
  auto users = by_round(logs.user);
  auto providers = by_round(logs.provider);
  auto auditors = by_round(logs.auditor);
  for (const auto& [r, e] : good_a) {
    if (logs.user && !users.count(r)) blame(rep.user, r, "round missing from log");
    if (logs.provider && !e->t3.empty() && !providers.count(r)) {
      blame(rep.provider, r, "round missing from log");
    }
  }
  for (const auto& [r, e] : good_u) {
    if (logs.auditor && !auditors.count(r)) blame(rep.auditor, r, "round missing from log");
    if (logs.provider && !e->t3.empty() && !providers.count(r)) {
      blame(rep.provider, r, "round missing from log");
    }
  }
  for (const auto& [r, e] : good_p) {
    if (logs.user && !users.count(r)) {
      blame(rep.user, r, "round missing from log");
    } else if (logs.auditor && !auditors.count(r)) {
      blame(rep.auditor, r, "round missing from log");
    }
  }
  return rep;
}

}  // namespace rfp::orfp
