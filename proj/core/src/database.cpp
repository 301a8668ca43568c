#include "rfp/database.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <set>

#include "json.hpp"
#include "rfp/hierarchy.hpp"
#include "rfp/timestamp.hpp"

namespace rfp {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kChallengeStartFlag = "version.test.challenge.setstarttag";
constexpr std::string_view kChallengeEndFlag = "version.test.challenge.setendtag";
constexpr std::string_view kExpectStartFlag = "version.test.expect.setstarttag";
constexpr std::string_view kExpectEndFlag = "version.test.expect.setendtag";
constexpr std::string_view kExpectType = "version.test.expect.type";
constexpr std::string_view kVariableType = "version.test.variables.type";
constexpr std::string_view kVariableFormat = "version.test.variables.format";
constexpr std::string_view kWaitAmount = "version.test.waittime.amount";
constexpr std::string_view kWaitUnit = "version.test.waittime.type";
constexpr std::string_view kChallengeStartTag = "version.test.challenge.starttag";
constexpr std::string_view kChallengeEndTag = "version.test.challenge.endtag";
constexpr std::string_view kExpectStartTag = "version.test.expect.starttag";
constexpr std::string_view kExpectEndTag = "version.test.expect.endtag";

[[noreturn]] void fail(DatabaseErrorKind kind, const std::string& label, const std::string& what) {
  throw DatabaseError(kind, label, what);
}

[[noreturn]] void schema(const std::string& label, const std::string& what) {
  fail(DatabaseErrorKind::schema, label, what);
}

bool valid_identifier(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::optional<bool> scalar_flag(const Scalar& s) {
  if (auto b = std::get_if<bool>(&s)) return *b;
  if (auto str = std::get_if<std::string>(&s)) {
    if (*str == "true") return true;
    if (*str == "false") return false;
  }
  return std::nullopt;
}

bool json_flag(const json& j, const std::string& label, const std::string& key) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "true") return true;
    if (s == "false") return false;
  }
  schema(label, "'" + key + "' must be true or false");
}

Scalar to_scalar(const json& j, const std::string& key) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  schema(key, "default value '" + key + "' must be a scalar");
}

json from_scalar(const Scalar& s) {
  return std::visit([](const auto& v) { return json(v); }, s);
}

const json& require(const json& obj, const char* key, const std::string& label) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(label, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& label) {
  const auto& j = require(obj, key, label);
  if (!j.is_string()) schema(label, std::string("field '") + key + "' must be a string");
  return j.get<std::string>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& label) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      schema(label, "unknown field '" + it.key() + "'");
    }
  }
}

void require_object(const json& j, const std::string& label, const std::string& what) {
  if (!j.is_object()) schema(label, what + " must be an object");
}

std::optional<std::chrono::microseconds> unit_duration(std::int64_t amount, std::string_view unit) {
  using namespace std::chrono;
  if (unit == "milliseconds" || unit == "ms") return duration_cast<microseconds>(milliseconds(amount));
  if (unit == "seconds" || unit == "s") return duration_cast<microseconds>(seconds(amount));
  if (unit == "microseconds" || unit == "us") return microseconds(amount);
  return std::nullopt;
}

WaitTime parse_wait(const json& j, const std::string& label) {
  require_object(j, label, "'waittime'");
  reject_unknown(j, {"amount", "type"}, label);
  const auto& amount = require(j, "amount", label);
  if (!amount.is_number_integer()) schema(label, "waittime amount must be an integer");
  WaitTime w{amount.get<std::int64_t>(), require_string(j, "type", label)};
  if (w.amount <= 0) schema(label, "waittime amount must be positive");
  if (!unit_duration(w.amount, w.unit)) schema(label, "unknown waittime unit '" + w.unit + "'");
  return w;
}

Version parse_label(const std::string& text, const std::string& context) {
  try {
    return Version::parse(text);
  } catch (const VersionParseError&) {
    schema(context, "malformed version label '" + text + "'");
  }
}

std::optional<std::string> default_string(const DatabaseMeta& meta, std::string_view key) {
  auto it = meta.default_values.find(std::string(key));
  if (it == meta.default_values.end()) return std::nullopt;
  if (auto s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

bool default_flag(const DatabaseMeta& meta, std::string_view key) {
  auto it = meta.default_values.find(std::string(key));
  if (it == meta.default_values.end()) return false;
  return scalar_flag(it->second).value_or(false);
}

std::optional<VariableFormat> default_format(const DatabaseMeta& meta) {
  auto text = default_string(meta, kVariableFormat);
  if (!text) return std::nullopt;
  return parse_variable_format(*text);
}

std::optional<WaitTime> default_wait(const DatabaseMeta& meta) {
  auto amount = meta.default_values.find(std::string(kWaitAmount));
  auto unit = default_string(meta, kWaitUnit);
  if (amount == meta.default_values.end() || !unit) return std::nullopt;
  auto n = std::get_if<std::int64_t>(&amount->second);
  if (!n) return std::nullopt;
  return WaitTime{*n, *unit};
}

void validate_meta(const DatabaseMeta& meta) {
  if (!is_rfc3339(meta.creation_timestamp)) {
    schema("creationTimestamp", "'" + meta.creation_timestamp + "' is not an RFC 3339 timestamp");
  }
  if (!is_rfc3339(meta.last_update_timestamp)) {
    schema("lastUpdateTimestamp",
           "'" + meta.last_update_timestamp + "' is not an RFC 3339 timestamp");
  }
  for (auto key : {kChallengeStartFlag, kChallengeEndFlag, kExpectStartFlag, kExpectEndFlag}) {
    auto it = meta.default_values.find(std::string(key));
    if (it != meta.default_values.end() && !scalar_flag(it->second)) {
      schema(std::string(key), "flag default must be true or false");
    }
  }
  if (auto type = meta.default_values.find(std::string(kExpectType));
      type != meta.default_values.end()) {
    auto s = std::get_if<std::string>(&type->second);
    if (!s || *s != "string") schema(std::string(kExpectType), "only expect type 'string' is supported");
  }
  if (auto type = meta.default_values.find(std::string(kVariableType));
      type != meta.default_values.end()) {
    auto s = std::get_if<std::string>(&type->second);
    if (!s || *s != "rand") schema(std::string(kVariableType), "only variable type 'rand' is supported");
  }
  if (meta.default_values.count(std::string(kVariableFormat)) && !default_format(meta)) {
    schema(std::string(kVariableFormat), "unknown variable format");
  }
  auto amount = meta.default_values.find(std::string(kWaitAmount));
  if (amount != meta.default_values.end()) {
    auto n = std::get_if<std::int64_t>(&amount->second);
    if (!n || *n <= 0) schema(std::string(kWaitAmount), "wait-time amount must be a positive integer");
    auto unit = default_string(meta, kWaitUnit);
    if (!unit || !unit_duration(*n, *unit)) schema(std::string(kWaitUnit), "unknown wait-time unit");
  }
}

VariableSpec parse_variable(const std::string& name, const json& j, const DatabaseMeta& meta,
                            const std::string& label) {
  if (!valid_identifier(name)) schema(label, "variable name '" + name + "' is not [a-z0-9_]+");
  require_object(j, label, "variable '" + name + "'");
  reject_unknown(j, {"format", "type", "min", "max", "length"}, label);
  VariableSpec spec;
  spec.name = name;
  if (auto it = j.find("type"); it != j.end() && (!it->is_string() || *it != "rand")) {
    schema(label, "variable '" + name + "': only type 'rand' is supported");
  }
  if (auto it = j.find("format"); it != j.end()) {
    if (!it->is_string()) schema(label, "variable '" + name + "': format must be a string");
    auto format = parse_variable_format(it->get<std::string>());
    if (!format) schema(label, "variable '" + name + "': unknown format '" + it->get<std::string>() + "'");
    spec.format = *format;
    spec.explicit_format = true;
  } else {
    auto format = default_format(meta);
    if (!format) schema(label, "variable '" + name + "' has no format and no default applies");
    spec.format = *format;
    spec.explicit_format = false;
  }
  auto integer_field = [&](const char* key) -> std::optional<std::int64_t> {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    if (!it->is_number_integer()) schema(label, "variable '" + name + "': '" + key + "' must be an integer");
    return it->get<std::int64_t>();
  };
  auto min = integer_field("min");
  auto max = integer_field("max");
  auto length = integer_field("length");
  switch (spec.format) {
    case VariableFormat::integer:
      if (!min || !max) schema(label, "variable '" + name + "': integer format needs min and max");
      if (*min > *max) schema(label, "variable '" + name + "': min exceeds max");
      spec.min = *min;
      spec.max = *max;
      break;
    case VariableFormat::string:
    case VariableFormat::binary:
      if (!length || *length <= 0 || *length > 4096) {
        schema(label, "variable '" + name + "': length must be in 1..4096");
      }
      spec.length = static_cast<std::uint32_t>(*length);
      break;
    case VariableFormat::dir_file:
      if (length && (*length <= 0 || *length > 255)) {
        schema(label, "variable '" + name + "': length must be in 1..255");
      }
      spec.length = length ? static_cast<std::uint32_t>(*length) : 0;
      break;
    case VariableFormat::version:
      break;
  }
  if (spec.format != VariableFormat::integer && (min || max)) {
    schema(label, "variable '" + name + "': min/max only apply to integer format");
  }
  if (spec.format == VariableFormat::integer && length) {
    schema(label, "variable '" + name + "': length does not apply to integer format");
  }
  return spec;
}

void resolve_defaults(VersionTest& t, const DatabaseMeta& meta) {
  const auto& o = t.overrides;
  t.challenge_tags.start = o.challenge_start.value_or(default_flag(meta, kChallengeStartFlag));
  t.challenge_tags.end = o.challenge_end.value_or(default_flag(meta, kChallengeEndFlag));
  t.expect_tags.start = o.expect_start.value_or(default_flag(meta, kExpectStartFlag));
  t.expect_tags.end = o.expect_end.value_or(default_flag(meta, kExpectEndFlag));
  t.expect_type = o.expect_type.value_or(default_string(meta, kExpectType).value_or("string"));
  if (t.expect_type != "string") schema(t.version.raw(), "only expect type 'string' is supported");
  auto wait = o.wait ? o.wait : default_wait(meta);
  if (wait) {
    t.wait_time = wait->duration();
  } else if (t.has_intrinsic()) {
    schema(t.version.raw(), "no wait time given and no default applies");
  }
}

VersionTest parse_test(const Version& version, const json& j, const DatabaseMeta& meta) {
  const std::string label = version.raw();
  require_object(j, label, "'test'");
  reject_unknown(j,
                 {"variables", "challenge", "expect", "waittime", "branching", "deprecated",
                  "reintroduced"},
                 label);
  VersionTest t;
  t.version = version;

  if (auto it = j.find("variables"); it != j.end()) {
    require_object(*it, label, "'variables'");
    for (auto v = it->begin(); v != it->end(); ++v) {
      t.variables.emplace(v.key(), parse_variable(v.key(), v.value(), meta, label));
    }
  }

  auto challenge = j.find("challenge");
  auto expect = j.find("expect");
  if ((challenge == j.end()) != (expect == j.end())) {
    schema(label, "'challenge' and 'expect' must be given together");
  }
  if (challenge != j.end()) {
    require_object(*challenge, label, "'challenge'");
    reject_unknown(*challenge, {"payload", "setstarttag", "setendtag"}, label);
    t.challenge_template = require_string(*challenge, "payload", label);
    if (auto f = challenge->find("setstarttag"); f != challenge->end()) {
      t.overrides.challenge_start = json_flag(*f, label, "setstarttag");
    }
    if (auto f = challenge->find("setendtag"); f != challenge->end()) {
      t.overrides.challenge_end = json_flag(*f, label, "setendtag");
    }
    require_object(*expect, label, "'expect'");
    reject_unknown(*expect, {"payload", "type", "setstarttag", "setendtag"}, label);
    t.expect_template = require_string(*expect, "payload", label);
    if (auto f = expect->find("type"); f != expect->end()) {
      if (!f->is_string()) schema(label, "expect type must be a string");
      t.overrides.expect_type = f->get<std::string>();
    }
    if (auto f = expect->find("setstarttag"); f != expect->end()) {
      t.overrides.expect_start = json_flag(*f, label, "setstarttag");
    }
    if (auto f = expect->find("setendtag"); f != expect->end()) {
      t.overrides.expect_end = json_flag(*f, label, "setendtag");
    }
  } else if (!t.variables.empty()) {
    schema(label, "variables declared without a challenge");
  }

  if (auto it = j.find("waittime"); it != j.end()) t.overrides.wait = parse_wait(*it, label);

  if (auto it = j.find("branching"); it != j.end()) {
    require_object(*it, label, "'branching'");
    std::set<Version> seen;
    for (auto ref = it->begin(); ref != it->end(); ++ref) {
      if (!ref->is_string()) schema(label, "branching flag for '" + ref.key() + "' must be a string");
      auto flag = ref->get<std::string>();
      if (flag.empty() || flag == "0" || flag == "false") {
        schema(label, "branching flag for '" + ref.key() + "' is not truthy");
      }
      auto target = parse_label(ref.key(), label);
      if (!seen.insert(target).second) schema(label, "duplicate branching reference '" + ref.key() + "'");
      t.branching.push_back({target, flag});
    }
  }

  if (auto it = j.find("deprecated"); it != j.end()) {
    if (!it->is_string()) schema(label, "'deprecated' must be a version label");
    Deprecation d{parse_label(it->get<std::string>(), label), std::nullopt};
    if (!(version < d.removed)) schema(label, "deprecation boundary must lie above the entry");
    if (auto re = j.find("reintroduced"); re != j.end()) {
      if (!re->is_string()) schema(label, "'reintroduced' must be a version label");
      d.reintroduced = parse_label(re->get<std::string>(), label);
      if (!(d.removed < *d.reintroduced)) schema(label, "reintroduction must lie above the removal");
    }
    t.deprecated = d;
  } else if (j.contains("reintroduced")) {
    schema(label, "'reintroduced' requires 'deprecated'");
  }

  resolve_defaults(t, meta);
  return t;
}

void check_referrals(const VersionSet& family, const std::map<Version, VersionTest>& entries) {
  auto dangling = [&](const VersionTest& from, const Version& to) {
    fail(DatabaseErrorKind::dangling_referral, from.version.raw(),
         "entry '" + from.version.raw() + "' refers to '" + to.raw() + "' which has no entry");
  };
  for (const auto& [v, t] : entries) {
    for (const auto& ref : t.branching) {
      if (!entries.count(ref.version)) dangling(t, ref.version);
    }
    if (t.deprecated) {
      auto it = entries.find(t.deprecated->removed);
      if (it == entries.end()) dangling(t, t.deprecated->removed);
      if (!it->second.has_intrinsic()) {
        schema(v.raw(), "deprecation boundary '" + t.deprecated->removed.raw() +
                            "' has no intrinsic test of its own");
      }
      if (t.deprecated->reintroduced && !family.contains(*t.deprecated->reintroduced)) {
        fail(DatabaseErrorKind::dangling_referral, v.raw(),
             "entry '" + v.raw() + "' names reintroduction '" + t.deprecated->reintroduced->raw() +
                 "' outside the family");
      }
    }
  }

  // Depth-first search for a cycle; self references are allowed.
  enum class Mark { none, active, done };
  std::map<Version, Mark> marks;
  std::function<void(const Version&)> visit = [&](const Version& v) {
    marks[v] = Mark::active;
    const auto& t = entries.at(v);
    std::vector<Version> next;
    for (const auto& ref : t.branching) {
      if (!(ref.version == v)) next.push_back(ref.version);
    }
    if (t.deprecated) next.push_back(t.deprecated->removed);
    for (const auto& n : next) {
      auto m = marks[n];
      if (m == Mark::active) {
        fail(DatabaseErrorKind::cycle, v.raw(),
             "referral cycle through '" + v.raw() + "' and '" + n.raw() + "'");
      }
      if (m == Mark::none) visit(n);
    }
    marks[v] = Mark::done;
  };
  for (const auto& [v, t] : entries) {
    if (marks[v] == Mark::none) visit(v);
  }
}

json test_to_json(const VersionTest& t) {
  json j = json::object();
  if (!t.variables.empty()) {
    json vars = json::object();
    for (const auto& [name, spec] : t.variables) {
      json v = json::object();
      if (spec.explicit_format) v["format"] = std::string(to_string(spec.format));
      switch (spec.format) {
        case VariableFormat::integer:
          v["min"] = spec.min;
          v["max"] = spec.max;
          break;
        case VariableFormat::string:
        case VariableFormat::binary:
          v["length"] = spec.length;
          break;
        case VariableFormat::dir_file:
          if (spec.length) v["length"] = spec.length;
          break;
        case VariableFormat::version:
          break;
      }
      vars[name] = v;
    }
    j["variables"] = vars;
  }
  if (t.challenge_template) {
    json c = {{"payload", *t.challenge_template}};
    if (t.overrides.challenge_start) c["setstarttag"] = *t.overrides.challenge_start;
    if (t.overrides.challenge_end) c["setendtag"] = *t.overrides.challenge_end;
    j["challenge"] = c;
    json e = {{"payload", t.expect_template}};
    if (t.overrides.expect_type) e["type"] = *t.overrides.expect_type;
    if (t.overrides.expect_start) e["setstarttag"] = *t.overrides.expect_start;
    if (t.overrides.expect_end) e["setendtag"] = *t.overrides.expect_end;
    j["expect"] = e;
  }
  if (t.overrides.wait) {
    j["waittime"] = {{"amount", t.overrides.wait->amount}, {"type", t.overrides.wait->unit}};
  }
  if (!t.branching.empty()) {
    json b = json::object();
    for (const auto& ref : t.branching) b[ref.version.raw()] = ref.flag;
    j["branching"] = b;
  }
  if (t.deprecated) {
    j["deprecated"] = t.deprecated->removed.raw();
    if (t.deprecated->reintroduced) j["reintroduced"] = t.deprecated->reintroduced->raw();
  }
  return j;
}

}  // namespace

DatabaseError::DatabaseError(DatabaseErrorKind kind, std::string label, const std::string& message)
    : std::runtime_error(message), kind_(kind), label_(std::move(label)) {}

std::string_view to_string(DatabaseErrorKind kind) {
  switch (kind) {
    case DatabaseErrorKind::malformed: return "malformed";
    case DatabaseErrorKind::schema: return "schema";
    case DatabaseErrorKind::dangling_referral: return "dangling-referral";
    case DatabaseErrorKind::cycle: return "cycle";
  }
  return "unknown";
}

std::string_view to_string(VariableFormat format) {
  switch (format) {
    case VariableFormat::integer: return "integer";
    case VariableFormat::string: return "string";
    case VariableFormat::binary: return "binary";
    case VariableFormat::version: return "version";
    case VariableFormat::dir_file: return "dir-file";
  }
  return "";
}

std::optional<VariableFormat> parse_variable_format(std::string_view text) {
  // "value" is the generic default in the stock metadata; it draws a number.
  if (text == "integer" || text == "value") return VariableFormat::integer;
  if (text == "string") return VariableFormat::string;
  if (text == "binary") return VariableFormat::binary;
  if (text == "version") return VariableFormat::version;
  if (text == "dir-file") return VariableFormat::dir_file;
  return std::nullopt;
}

std::chrono::microseconds WaitTime::duration() const {
  return unit_duration(amount, unit).value_or(std::chrono::microseconds{0});
}

Database::Database(DatabaseMeta meta, VersionSet family, std::map<Version, VersionTest> entries)
    : meta_(std::move(meta)), family_(std::move(family)), entries_(std::move(entries)) {
  validate_meta(meta_);
  for (auto& [v, t] : entries_) {
    if (!family_.contains(v)) schema(v.raw(), "entry '" + v.raw() + "' is not a family member");
    resolve_defaults(t, meta_);
  }
  check_referrals(family_, entries_);
}

const VersionTest* Database::entry(const Version& v) const {
  auto it = entries_.find(v);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Database::challenge_start_tag() const {
  return default_string(meta_, kChallengeStartTag).value_or("");
}
std::string Database::challenge_end_tag() const {
  return default_string(meta_, kChallengeEndTag).value_or("");
}
std::string Database::expect_start_tag() const {
  return default_string(meta_, kExpectStartTag).value_or("");
}
std::string Database::expect_end_tag() const {
  return default_string(meta_, kExpectEndTag).value_or("");
}

Database Database::with_entry(VersionTest test) const {
  auto family = family_;
  if (!family.contains(test.version)) family.insert(test.version);
  auto entries = entries_;
  entries.erase(test.version);
  auto version = test.version;
  entries.emplace(version, std::move(test));
  return Database(meta_, std::move(family), std::move(entries));
}

Database load_database(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    fail(DatabaseErrorKind::malformed, "", std::string("malformed JSON: ") + e.what());
  }
  require_object(root, "", "document");
  reject_unknown(root,
                 {"creationTimestamp", "lastUpdateTimestamp", "defaultvalues", "settings", "service"},
                 "");

  DatabaseMeta meta;
  meta.creation_timestamp = require_string(root, "creationTimestamp", "");
  meta.last_update_timestamp = require_string(root, "lastUpdateTimestamp", "");
  const auto& defaults = require(root, "defaultvalues", "");
  require_object(defaults, "defaultvalues", "'defaultvalues'");
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    meta.default_values.emplace(it.key(), to_scalar(it.value(), it.key()));
  }
  if (auto it = root.find("settings"); it != root.end()) {
    require_object(*it, "settings", "'settings'");
    reject_unknown(*it, {"interface.challenges", "interface.responses", "strategies"}, "settings");
    if (it->contains("interface.challenges")) {
      meta.challenge_interface = require_string(*it, "interface.challenges", "settings");
    }
    if (it->contains("interface.responses")) {
      meta.response_interface = require_string(*it, "interface.responses", "settings");
    }
    if (auto s = it->find("strategies"); s != it->end()) {
      if (!s->is_array()) schema("settings", "'strategies' must be a list");
      for (const auto& name : *s) {
        if (!name.is_string()) schema("settings", "strategy names must be strings");
        meta.strategies.push_back(name.get<std::string>());
      }
    }
  }

  const auto& service = require(root, "service", "");
  require_object(service, "service", "'service'");
  reject_unknown(service, {"name", "versions"}, "service");
  meta.service_name = require_string(service, "name", "service");
  validate_meta(meta);

  const auto& versions = require(service, "versions", "service");
  require_object(versions, "versions", "'versions'");
  VersionSet family(meta.service_name);
  std::map<Version, VersionTest> entries;
  for (auto it = versions.begin(); it != versions.end(); ++it) {
    auto version = parse_label(it.key(), it.key());
    try {
      family.insert(version);
    } catch (const std::invalid_argument& e) {
      schema(it.key(), e.what());
    }
    require_object(it.value(), it.key(), "version '" + it.key() + "'");
    reject_unknown(it.value(), {"test"}, it.key());
    if (auto test = it->find("test"); test != it->end()) {
      entries.emplace(version, parse_test(version, *test, meta));
    }
  }
  return Database(std::move(meta), std::move(family), std::move(entries));
}

std::string serialize_database(const Database& db) {
  const auto& meta = db.meta();
  json root = json::object();
  root["creationTimestamp"] = meta.creation_timestamp;
  root["lastUpdateTimestamp"] = meta.last_update_timestamp;
  json defaults = json::object();
  for (const auto& [key, value] : meta.default_values) defaults[key] = from_scalar(value);
  root["defaultvalues"] = defaults;
  json settings = json::object();
  if (!meta.challenge_interface.empty()) settings["interface.challenges"] = meta.challenge_interface;
  if (!meta.response_interface.empty()) settings["interface.responses"] = meta.response_interface;
  if (!meta.strategies.empty()) settings["strategies"] = meta.strategies;
  root["settings"] = settings;
  json versions = json::object();
  for (const auto& v : db.family()) {
    json node = json::object();
    if (const auto* t = db.entry(v)) node["test"] = test_to_json(*t);
    versions[v.raw()] = node;
  }
  root["service"] = {{"name", meta.service_name}, {"versions", versions}};
  return root.dump(2) + "\n";
}

Database make_empty_database(const std::string& service_name, const std::string& now) {
  DatabaseMeta meta;
  meta.creation_timestamp = now;
  meta.last_update_timestamp = now;
  meta.default_values = {
      {std::string(kChallengeStartFlag), std::string("true")},
      {std::string(kChallengeEndFlag), std::string("false")},
      {std::string(kExpectStartFlag), std::string("false")},
      {std::string(kExpectEndFlag), std::string("false")},
      {std::string(kExpectType), std::string("string")},
      {"version.test.label", std::string("0")},
      {std::string(kVariableType), std::string("rand")},
      {std::string(kVariableFormat), std::string("value")},
      {std::string(kWaitAmount), std::int64_t{200}},
      {std::string(kWaitUnit), std::string("milliseconds")},
  };
  meta.challenge_interface = "ftp";
  meta.response_interface = "http";
  meta.strategies = {"BinarySearch", "CascadingBinarySearch", "HighToLow", "LowToHigh",
                     "MajorHighestStepUp"};
  meta.service_name = service_name;
  return Database(std::move(meta), VersionSet(service_name), {});
}

ReferralKind classify_referral(const Database& db, const VersionTest& from, const Version& to) {
  if (from.has_intrinsic()) return ReferralKind::prerequisite;
  if (same_line(from.version, to) || db.family().is_line_origin(to)) {
    return ReferralKind::prerequisite;
  }
  return ReferralKind::peer;
}

TestPlan resolve_plan(const Database& db, const Version& v) {
  if (!db.family().contains(v)) {
    throw std::out_of_range("version '" + v.raw() + "' is not part of the family");
  }
  TestPlan plan{v, {}};
  auto emit = [&](const Version& x, Polarity p) {
    for (const auto& step : plan.steps) {
      if (step.version == x) return;
    }
    plan.steps.push_back({x, p});
  };
  const std::size_t limit = db.family().size();
  std::function<void(const Version&, std::size_t)> expand = [&](const Version& x,
                                                                 std::size_t depth) {
    if (depth > limit) {
      throw DatabaseError(DatabaseErrorKind::cycle, v.raw(),
                          "referral expansion of '" + v.raw() + "' exceeds the family size");
    }
    const auto* t = db.entry(x);
    if (!t) return;
    bool own_done = false;
    for (const auto& ref : t->branching) {
      if (ref.version == x) {
        if (t->has_intrinsic()) emit(x, Polarity::expect_pass);
        own_done = true;
      } else {
        expand(ref.version, depth + 1);
      }
    }
    if (t->has_intrinsic() && !own_done) emit(x, Polarity::expect_pass);
    if (t->deprecated) emit(t->deprecated->removed, Polarity::expect_fail);
  };
  expand(v, 0);
  return plan;
}

IndependenceReport validate_strategy_independence(const Database& db) {
  IndependenceReport report;
  std::map<Version, TestPlan> plans;
  for (const auto& v : db.family()) {
    try {
      plans.emplace(v, resolve_plan(db, v));
    } catch (const std::exception& e) {
      report.problems.push_back("'" + v.raw() + "': " + e.what());
    }
  }

  std::optional<Version> last_tested;
  for (const auto& v : db.family()) {
    auto it = plans.find(v);
    if (it == plans.end()) continue;
    if (it->second.empty()) {
      report.equivalent.emplace_back(v, last_tested);
    } else {
      last_tested = v;
    }
  }

  for (const auto& [v, t] : db.entries()) {
    for (const auto& ref : t.branching) {
      auto p = plans.find(ref.version);
      if (p != plans.end() && p->second.empty()) {
        report.problems.push_back("'" + v.raw() + "' refers to '" + ref.version.raw() +
                                  "', which carries no test");
      }
    }
  }

  for (auto& problem : hierarchy_problems(db)) report.problems.push_back(std::move(problem));
  return report;
}

}  // namespace rfp
