#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfp/version.hpp"

namespace rfp {

enum class DatabaseErrorKind { malformed, schema, dangling_referral, cycle };

class DatabaseError : public std::runtime_error {
 public:
  DatabaseError(DatabaseErrorKind kind, std::string label, const std::string& message);
  DatabaseErrorKind kind() const noexcept { return kind_; }
  // Version label (or JSON key) the error is about; empty for document-level errors.
  const std::string& label() const noexcept { return label_; }

 private:
  DatabaseErrorKind kind_;
  std::string label_;
};

std::string_view to_string(DatabaseErrorKind kind);

using Scalar = std::variant<std::string, std::int64_t, double, bool>;

struct DatabaseMeta {
  std::string creation_timestamp;
  std::string last_update_timestamp;
  std::map<std::string, Scalar> default_values;
  std::string challenge_interface;
  std::string response_interface;
  std::vector<std::string> strategies;
  std::string service_name;

  friend bool operator==(const DatabaseMeta&, const DatabaseMeta&) = default;
};

enum class VariableFormat { integer, string, binary, version, dir_file };

std::string_view to_string(VariableFormat format);
std::optional<VariableFormat> parse_variable_format(std::string_view text);

struct VariableSpec {
  std::string name;
  VariableFormat format = VariableFormat::integer;
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::uint32_t length = 0;
  // Whether the format was given on the variable itself rather than by default.
  bool explicit_format = true;

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

struct TagFlags {
  bool start = false;
  bool end = false;
  friend bool operator==(const TagFlags&, const TagFlags&) = default;
};

struct WaitTime {
  std::int64_t amount = 0;
  std::string unit;
  std::chrono::microseconds duration() const;
  friend bool operator==(const WaitTime&, const WaitTime&) = default;
};

struct Referral {
  Version version;
  std::string flag;
  friend bool operator==(const Referral& a, const Referral& b) {
    return a.version == b.version && a.version.raw() == b.version.raw() && a.flag == b.flag;
  }
};

struct Deprecation {
  Version removed;
  std::optional<Version> reintroduced;
  friend bool operator==(const Deprecation&, const Deprecation&) = default;
};

// Fields an entry sets explicitly; anything absent falls back to the
// database defaults.
struct TestOverrides {
  std::optional<bool> challenge_start, challenge_end;
  std::optional<bool> expect_start, expect_end;
  std::optional<std::string> expect_type;
  std::optional<WaitTime> wait;
  friend bool operator==(const TestOverrides&, const TestOverrides&) = default;
};

struct VersionTest {
  Version version;
  std::map<std::string, VariableSpec> variables;
  // Set iff the entry carries its own intrinsic test.
  std::optional<std::string> challenge_template;
  std::string expect_template;
  std::vector<Referral> branching;
  std::optional<Deprecation> deprecated;
  TestOverrides overrides;

  // Resolved against the defaults at load time.
  std::string expect_type;
  std::chrono::microseconds wait_time{0};
  TagFlags challenge_tags;
  TagFlags expect_tags;

  bool has_intrinsic() const noexcept { return challenge_template.has_value(); }

  friend bool operator==(const VersionTest&, const VersionTest&) = default;
};

enum class Polarity { expect_pass, expect_fail };

struct PlanStep {
  Version version;
  Polarity polarity = Polarity::expect_pass;
  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct TestPlan {
  Version version;
  std::vector<PlanStep> steps;
  bool empty() const noexcept { return steps.empty(); }
};

class Database {
 public:
  Database() = default;
  Database(DatabaseMeta meta, VersionSet family, std::map<Version, VersionTest> entries);

  const DatabaseMeta& meta() const noexcept { return meta_; }
  const VersionSet& family() const noexcept { return family_; }
  const std::map<Version, VersionTest>& entries() const noexcept { return entries_; }

  const VersionTest* entry(const Version& v) const;
  bool is_perfect() const noexcept { return entries_.size() == family_.size(); }

  std::string challenge_start_tag() const;
  std::string challenge_end_tag() const;
  std::string expect_start_tag() const;
  std::string expect_end_tag() const;

  // Returns a new database with `test` added or replaced; the result is
  // validated like a freshly loaded document.
  Database with_entry(VersionTest test) const;

  friend bool operator==(const Database&, const Database&) = default;

 private:
  DatabaseMeta meta_;
  VersionSet family_;
  std::map<Version, VersionTest> entries_;
};

Database load_database(std::string_view document);
std::string serialize_database(const Database& db);

// Metadata skeleton with the stock defaults; both timestamps set to `now`.
Database make_empty_database(const std::string& service_name, const std::string& now);

// Whether `from`'s referral to `to` is a prerequisite (origin check, technical
// dependency, same-line reference) or names a peer that shares the intrinsic
// function of `from` on another branch.
enum class ReferralKind { prerequisite, peer };
ReferralKind classify_referral(const Database& db, const VersionTest& from, const Version& to);

TestPlan resolve_plan(const Database& db, const Version& v);

struct IndependenceReport {
  std::vector<std::string> problems;
  // Versions with empty plans, paired with the closest lower version whose
  // plan is not empty (absent when there is none).
  std::vector<std::pair<Version, std::optional<Version>>> equivalent;
  bool ok() const noexcept { return problems.empty(); }
};

IndependenceReport validate_strategy_independence(const Database& db);

}  // namespace rfp
