#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rfp {

class VersionParseError : public std::runtime_error {
 public:
  explicit VersionParseError(std::string label);
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

enum class PreStage : std::uint8_t { alpha, beta, rc };

struct PreRelease {
  PreStage stage = PreStage::beta;
  std::uint32_t ordinal = 0;

  friend auto operator<=>(const PreRelease&, const PreRelease&) = default;
};

// A release label mapped onto (major, minor, patch, pre). Anything after the
// pre-release tag (e.g. "-car") is kept in raw() but does not affect ordering.
class Version {
 public:
  Version() = default;
  Version(std::uint32_t major, std::uint32_t minor, std::uint32_t patch,
          std::optional<PreRelease> pre = std::nullopt);

  static Version parse(std::string_view label);
  static std::optional<Version> try_parse(std::string_view label) noexcept;

  std::uint32_t major() const noexcept { return major_; }
  std::uint32_t minor() const noexcept { return minor_; }
  std::uint32_t patch() const noexcept { return patch_; }
  const std::optional<PreRelease>& pre() const noexcept { return pre_; }
  const std::string& raw() const noexcept { return raw_; }
  const std::string& extra() const noexcept { return extra_; }

  // MAJOR.MINOR.PATCH[PRE], without the extra suffix.
  std::string canonical() const;

  friend std::strong_ordering operator<=>(const Version& a, const Version& b) noexcept;
  friend bool operator==(const Version& a, const Version& b) noexcept {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  std::uint32_t major_ = 0;
  std::uint32_t minor_ = 0;
  std::uint32_t patch_ = 0;
  std::optional<PreRelease> pre_;
  std::string extra_;
  std::string raw_ = "0.0.0";
};

enum class Ordering { less, equal, greater };

Ordering cmp(const Version& a, const Version& b) noexcept;

enum class BranchLevel { minor, major };

// Zeroes the components below `level`. A version that already sits on its
// origin triple is returned unchanged, so 7.3.0rc4 stays below 7.3.0.
Version branch_origin(const Version& v, BranchLevel level);

struct Line {
  std::uint32_t major = 0;
  std::uint32_t minor = 0;
  friend auto operator<=>(const Line&, const Line&) = default;
};

inline Line line_of(const Version& v) noexcept { return {v.major(), v.minor()}; }
inline bool same_line(const Version& a, const Version& b) noexcept {
  return line_of(a) == line_of(b);
}

std::string to_string(const Line& line);

// Versions of one software family, ascending and free of duplicates.
class VersionSet {
 public:
  VersionSet() = default;
  explicit VersionSet(std::string family_name) : family_name_(std::move(family_name)) {}
  VersionSet(std::string family_name, std::vector<Version> versions);

  const std::string& family_name() const noexcept { return family_name_; }

  // Throws std::invalid_argument if an equal version is already present.
  void insert(const Version& v);
  bool contains(const Version& v) const noexcept;
  std::optional<std::size_t> index_of(const Version& v) const noexcept;

  // Lowest member on the line of v, if the line has any members.
  std::optional<Version> line_origin(const Line& line) const;
  bool is_line_origin(const Version& v) const;
  // Lowest member with the given major.
  std::optional<Version> major_origin(std::uint32_t major) const;

  std::size_t size() const noexcept { return versions_.size(); }
  bool empty() const noexcept { return versions_.empty(); }
  const Version& operator[](std::size_t i) const { return versions_[i]; }
  const std::vector<Version>& versions() const noexcept { return versions_; }
  auto begin() const noexcept { return versions_.begin(); }
  auto end() const noexcept { return versions_.end(); }

  friend bool operator==(const VersionSet&, const VersionSet&) = default;

 private:
  std::string family_name_;
  std::vector<Version> versions_;
};

}  // namespace rfp
