#include "rfp/version.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <stdexcept>

namespace rfp {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Reads a run of digits starting at pos. Returns nullopt on overflow or when
// no digit is present.
std::optional<std::uint32_t> read_number(std::string_view s, std::size_t& pos) {
  std::size_t begin = pos;
  while (pos < s.size() && is_digit(s[pos])) ++pos;
  if (pos == begin) return std::nullopt;
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data() + begin, s.data() + pos, value);
  if (ec != std::errc{}) return std::nullopt;
  return value;
}

struct StageName {
  std::string_view text;
  PreStage stage;
};

// Longest names first so "alpha" wins over "a" and "beta" over "b".
constexpr StageName kStages[] = {
    {"alpha", PreStage::alpha}, {"beta", PreStage::beta}, {"rc", PreStage::rc},
    {"RC", PreStage::rc},       {"a", PreStage::alpha},   {"b", PreStage::beta},
};

std::optional<PreRelease> read_pre(std::string_view s, std::size_t& pos) {
  std::size_t start = pos;
  if (start < s.size() && (s[start] == '-' || s[start] == '.')) ++start;
  for (const auto& name : kStages) {
    if (s.substr(start, name.text.size()) != name.text) continue;
    std::size_t at = start + name.text.size();
    auto ordinal = read_number(s, at);
    if (!ordinal) continue;
    pos = at;
    return PreRelease{name.stage, *ordinal};
  }
  return std::nullopt;
}

std::string stage_text(PreStage stage) {
  switch (stage) {
    case PreStage::alpha: return "alpha";
    case PreStage::beta: return "b";
    case PreStage::rc: return "rc";
  }
  return "";
}

}  // namespace

VersionParseError::VersionParseError(std::string label)
    : std::runtime_error("malformed version label '" + label + "'"), label_(std::move(label)) {}

Version::Version(std::uint32_t major, std::uint32_t minor, std::uint32_t patch,
                 std::optional<PreRelease> pre)
    : major_(major), minor_(minor), patch_(patch), pre_(pre) {
  raw_ = canonical();
}

std::optional<Version> Version::try_parse(std::string_view label) noexcept {
  try {
    return parse(label);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Version Version::parse(std::string_view label) {
  std::size_t pos = 0;
  auto major = read_number(label, pos);
  if (!major) throw VersionParseError(std::string(label));

  std::uint32_t parts[2] = {0, 0};
  for (auto& part : parts) {
    if (pos + 1 < label.size() && label[pos] == '.' && is_digit(label[pos + 1])) {
      ++pos;
      auto n = read_number(label, pos);
      if (!n) throw VersionParseError(std::string(label));
      part = *n;
    } else {
      break;
    }
  }

  Version v;
  v.major_ = *major;
  v.minor_ = parts[0];
  v.patch_ = parts[1];
  v.pre_ = read_pre(label, pos);
  v.extra_ = std::string(label.substr(pos));
  v.raw_ = std::string(label);
  return v;
}

std::string Version::canonical() const {
  std::string out = std::to_string(major_) + '.' + std::to_string(minor_) + '.' +
                    std::to_string(patch_);
  if (pre_) out += stage_text(pre_->stage) + std::to_string(pre_->ordinal);
  return out;
}

std::strong_ordering operator<=>(const Version& a, const Version& b) noexcept {
  if (auto c = a.major_ <=> b.major_; c != 0) return c;
  if (auto c = a.minor_ <=> b.minor_; c != 0) return c;
  if (auto c = a.patch_ <=> b.patch_; c != 0) return c;
  if (a.pre_.has_value() != b.pre_.has_value()) {
    return a.pre_.has_value() ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (a.pre_) return *a.pre_ <=> *b.pre_;
  return std::strong_ordering::equal;
}

Ordering cmp(const Version& a, const Version& b) noexcept {
  auto c = a <=> b;
  if (c < 0) return Ordering::less;
  if (c > 0) return Ordering::greater;
  return Ordering::equal;
}

Version branch_origin(const Version& v, BranchLevel level) {
  std::uint32_t minor = level == BranchLevel::minor ? v.minor() : 0;
  if (minor == v.minor() && v.patch() == 0) return Version(v.major(), v.minor(), 0, v.pre());
  return Version(v.major(), minor, 0);
}

std::string to_string(const Line& line) {
  return std::to_string(line.major) + '.' + std::to_string(line.minor);
}

VersionSet::VersionSet(std::string family_name, std::vector<Version> versions)
    : family_name_(std::move(family_name)) {
  for (auto& v : versions) insert(v);
}

void VersionSet::insert(const Version& v) {
  auto it = std::lower_bound(versions_.begin(), versions_.end(), v);
  if (it != versions_.end() && *it == v) {
    throw std::invalid_argument("duplicate version '" + v.raw() + "' (equal to '" + it->raw() +
                                "')");
  }
  versions_.insert(it, v);
}

bool VersionSet::contains(const Version& v) const noexcept {
  return std::binary_search(versions_.begin(), versions_.end(), v);
}

std::optional<std::size_t> VersionSet::index_of(const Version& v) const noexcept {
  auto it = std::lower_bound(versions_.begin(), versions_.end(), v);
  if (it == versions_.end() || !(*it == v)) return std::nullopt;
  return static_cast<std::size_t>(it - versions_.begin());
}

std::optional<Version> VersionSet::line_origin(const Line& line) const {
  for (const auto& v : versions_) {
    if (line_of(v) == line) return v;
  }
  return std::nullopt;
}

bool VersionSet::is_line_origin(const Version& v) const {
  auto origin = line_origin(line_of(v));
  return origin && *origin == v;
}

std::optional<Version> VersionSet::major_origin(std::uint32_t major) const {
  for (const auto& v : versions_) {
    if (v.major() == major) return v;
  }
  return std::nullopt;
}

}  // namespace rfp
