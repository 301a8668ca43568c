#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rfp/database.hpp"

namespace rfp {

// Uniform random draws. Production instances read the operating system
// CSPRNG; seeded instances are reproducible and meant for tests.
class RandomnessSource {
 public:
  static RandomnessSource secure();
  static RandomnessSource seeded(std::uint64_t seed);

  RandomnessSource(const RandomnessSource&) = delete;
  RandomnessSource& operator=(const RandomnessSource&) = delete;
  RandomnessSource(RandomnessSource&&) noexcept = default;
  RandomnessSource& operator=(RandomnessSource&&) noexcept = default;

  bool is_seeded() const noexcept { return engine_.has_value(); }

  std::uint64_t next_u64();
  // Unbiased draw from [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  std::int64_t uniform(std::int64_t min, std::int64_t max);
  void fill(unsigned char* out, std::size_t n);

 private:
  RandomnessSource() = default;
  std::optional<std::mt19937_64> engine_;
};

// Variable name -> canonical text of the drawn value.
using Binding = std::map<std::string, std::string>;

// Alphabet for "string" values and dir-file path segments.
inline constexpr std::string_view kStringAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";

// integer: decimal in [min, max]. string: `length` chars of kStringAlphabet.
// binary: `length` random bytes, lowercase hex. version: raw label of a
// family member. dir-file: "<seg>/<seg>.txt", segments of `length` (default 8)
// chars.
std::string draw(const VariableSpec& spec, RandomnessSource& rng, const VersionSet* family = nullptr);

Binding draw_binding(const VersionTest& test, RandomnessSource& rng, const VersionSet& family);

class RenderError : public std::runtime_error {
 public:
  explicit RenderError(std::string name);
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

struct Wrap {
  std::string prefix;
  std::string suffix;
};

// Replaces every #name# whose name is bound. A declared name without a
// binding throws RenderError; any other '#' text is copied unchanged.
std::string render(std::string_view tmpl, const Binding& binding,
                   const std::set<std::string>& declared, const Wrap& wrap = {});
std::string render(std::string_view tmpl, const Binding& binding, const Wrap& wrap = {});

enum class Reason { none, mismatch, timeout, transport_error };
std::string_view to_string(Reason reason);

struct Judgement {
  bool delta = false;
  Reason reason = Reason::none;
};

// Passes iff a response arrived, equals `expected` after stripping the
// optional tags, and elapsed <= deadline. `absent_reason` is reported when
// no response arrived.
Judgement judge(const std::optional<std::string>& actual, std::string_view expected,
                std::chrono::microseconds elapsed, std::chrono::microseconds deadline,
                const Wrap& strip = {}, Reason absent_reason = Reason::timeout);

struct RenderedTest {
  Version version;
  std::string challenge_payload;
  std::string expected_payload;
  std::chrono::microseconds deadline{0};
  Binding binding;
  std::string challenge_interface;
  std::string response_interface;
  Wrap expect_strip;
};

// Pre: test has an intrinsic challenge.
RenderedTest render_test(const Database& db, const VersionTest& test, const Binding& binding);

}  // namespace rfp
