#include "rfp/version.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace rfp {
namespace {

Version V(const char* s) { return Version::parse(s); }

TEST(VersionParse, PlainTriple) {
  auto v = V("7.1.1");
  EXPECT_EQ(v.major(), 7u);
  EXPECT_EQ(v.minor(), 1u);
  EXPECT_EQ(v.patch(), 1u);
  EXPECT_FALSE(v.pre());
  EXPECT_EQ(v.raw(), "7.1.1");
}

TEST(VersionParse, ReleaseCandidate) {
  auto v = V("7.3.0rc5");
  EXPECT_EQ(v, Version(7, 3, 0, PreRelease{PreStage::rc, 5}));
  ASSERT_TRUE(v.pre());
  EXPECT_EQ(v.pre()->stage, PreStage::rc);
  EXPECT_EQ(v.pre()->ordinal, 5u);
}

TEST(VersionParse, Zero) { EXPECT_EQ(V("0.0.0"), Version(0, 0, 0)); }

TEST(VersionParse, MissingComponentsDefaultToZero) {
  EXPECT_EQ(V("5"), Version(5, 0, 0));
  EXPECT_EQ(V("4.0b1"), Version(4, 0, 0, PreRelease{PreStage::beta, 1}));
}

TEST(VersionParse, ExtraSuffixKeptButIgnored) {
  auto v = V("20.9.85-car");
  EXPECT_EQ(v, Version(20, 9, 85));
  EXPECT_EQ(v.raw(), "20.9.85-car");
  EXPECT_EQ(v.extra(), "-car");
  EXPECT_EQ(v.canonical(), "20.9.85");
}

TEST(VersionParse, MalformedNamesTheLabel) {
  for (const char* bad : {"", "abc", "v7.1", ".1.2"}) {
    try {
      Version::parse(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const VersionParseError& e) {
      EXPECT_EQ(e.label(), bad);
      EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
    }
  }
  EXPECT_FALSE(Version::try_parse("abc"));
}

TEST(VersionParse, CanonicalRoundTrip) {
  for (const char* label : {"7.1.1", "7.3.0rc4", "4.0.0b1", "5.0.0alpha2", "0.0.0", "10.20.30"}) {
    auto v = V(label);
    EXPECT_EQ(v.canonical(), label);
    EXPECT_EQ(V(v.canonical().c_str()), v);
  }
}

TEST(VersionCmp, Examples) {
  EXPECT_EQ(cmp(Version(7, 1, 21), Version(7, 2, 0)), Ordering::less);
  EXPECT_EQ(cmp(Version(1, 2, 3), Version(1, 2, 3)), Ordering::equal);
  EXPECT_EQ(cmp(V("7.3.0rc4"), V("7.3.0")), Ordering::less);
  EXPECT_EQ(cmp(V("7.3.0"), V("7.3.0rc4")), Ordering::greater);
}

TEST(VersionCmp, PreReleaseStagesAndOrdinals) {
  EXPECT_LT(V("7.3.0alpha1"), V("7.3.0b1"));
  EXPECT_LT(V("7.3.0b2"), V("7.3.0rc1"));
  EXPECT_LT(V("7.3.0rc4"), V("7.3.0rc5"));
  EXPECT_LT(V("7.2.14"), V("7.3.0alpha1"));
}

// Labels of the shipped family in release order.
TEST(VersionCmp, SortsFixtureFamilyChronologically) {
  const std::vector<std::string> chronological = {
      "4.0b1",  "4.4.9",  "5.0.0b1", "5.2.0",  "5.6.40", "7.0.0",  "7.0.15", "7.0.22",
      "7.0.26", "7.1.0",  "7.1.1",   "7.1.2",  "7.1.20", "7.1.21", "7.2.0",  "7.2.1",
      "7.2.2",  "7.2.8",  "7.2.9",   "7.2.11", "7.2.14", "7.3.0rc4"};
  std::vector<Version> vs;
  for (const auto& l : chronological) vs.push_back(V(l.c_str()));
  std::mt19937 g(1);
  std::shuffle(vs.begin(), vs.end(), g);
  std::sort(vs.begin(), vs.end());
  for (std::size_t i = 0; i < vs.size(); ++i) EXPECT_EQ(vs[i].raw(), chronological[i]);
}

TEST(BranchOrigin, Examples) {
  EXPECT_EQ(branch_origin(Version(7, 2, 9), BranchLevel::minor), Version(7, 2, 0));
  EXPECT_EQ(branch_origin(Version(7, 0, 0), BranchLevel::minor), Version(7, 0, 0));
  EXPECT_EQ(branch_origin(Version(5, 6, 31), BranchLevel::major), Version(5, 0, 0));
}

TEST(BranchOrigin, DropsPreReleaseAboveTheOrigin) {
  EXPECT_EQ(branch_origin(V("7.2.9rc1"), BranchLevel::minor), Version(7, 2, 0));
}

TEST(BranchOrigin, IdempotentAndNeverIncreases) {
  std::mt19937_64 g(3);
  std::uniform_int_distribution<int> d(0, 4);
  for (int i = 0; i < 2000; ++i) {
    std::optional<PreRelease> pre;
    if (d(g) == 0) pre = PreRelease{PreStage::rc, static_cast<std::uint32_t>(d(g) + 1)};
    Version v(d(g), d(g), d(g), pre);
    for (auto level : {BranchLevel::minor, BranchLevel::major}) {
      auto o = branch_origin(v, level);
      EXPECT_EQ(branch_origin(o, level), o);
      EXPECT_FALSE(v < o) << v.canonical();
    }
  }
}

TEST(VersionSetTest, SortedAndUnique) {
  VersionSet s("php");
  s.insert(V("7.2.0"));
  s.insert(V("7.1.0"));
  s.insert(V("7.1.5"));
  EXPECT_THROW(s.insert(V("7.1.5")), std::invalid_argument);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], V("7.1.0"));
  EXPECT_EQ(s[2], V("7.2.0"));
  EXPECT_EQ(s.index_of(V("7.1.5")), 1u);
  EXPECT_FALSE(s.contains(V("7.1.6")));
}

TEST(VersionSetTest, Origins) {
  VersionSet s("php", {V("5.6.40"), V("7.0.0"), V("7.1.3"), V("7.1.9"), V("7.3.0rc4")});
  EXPECT_EQ(s.line_origin({7, 1}), V("7.1.3"));
  EXPECT_EQ(s.line_origin({7, 3}), V("7.3.0rc4"));
  EXPECT_FALSE(s.line_origin({7, 2}));
  EXPECT_TRUE(s.is_line_origin(V("7.1.3")));
  EXPECT_FALSE(s.is_line_origin(V("7.1.9")));
  EXPECT_EQ(s.major_origin(5), V("5.6.40"));
  EXPECT_EQ(s.major_origin(7), V("7.0.0"));
}

}  // namespace
}  // namespace rfp
