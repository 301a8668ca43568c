#include "rfp/challenge.hpp"

#include <gtest/gtest.h>

#include <regex>

#include "support.hpp"

namespace rfp {
namespace {

using namespace std::chrono_literals;

VariableSpec integer(std::int64_t min, std::int64_t max) {
  return VariableSpec{"ax", VariableFormat::integer, min, max, 0};
}

TEST(Draw, IntegerWithinRange) {
  auto rng = RandomnessSource::seeded(1);
  auto spec = integer(1, 999999999);
  for (int i = 0; i < 1000; ++i) {
    auto n = std::stoll(draw(spec, rng));
    EXPECT_GE(n, 1);
    EXPECT_LE(n, 999999999);
  }
}

TEST(Draw, DegenerateRange) {
  auto rng = RandomnessSource::seeded(1);
  EXPECT_EQ(draw(integer(5, 5), rng), "5");
}

TEST(Draw, PairCollisionsAreRare) {
  // Expected collisions over 10^4 pairs: 10^4 / 999999999, about 1e-5.
  auto rng = RandomnessSource::seeded(2);
  auto spec = integer(1, 999999999);
  int collisions = 0;
  for (int i = 0; i < 10000; ++i) collisions += draw(spec, rng) == draw(spec, rng);
  EXPECT_LE(collisions, 1);
}

TEST(Draw, SmallRangeCollisionFrequency) {
  // With |range| = 10 two draws agree with probability 1/10.
  auto rng = RandomnessSource::seeded(3);
  auto spec = integer(0, 9);
  int collisions = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) collisions += draw(spec, rng) == draw(spec, rng);
  EXPECT_NEAR(static_cast<double>(collisions) / n, 0.1, 0.01);
}

TEST(Draw, OtherFormats) {
  auto rng = RandomnessSource::seeded(4);
  auto s = draw(VariableSpec{"s", VariableFormat::string, 0, 0, 12}, rng);
  EXPECT_TRUE(std::regex_match(s, std::regex("[a-z0-9]{12}")));
  auto b = draw(VariableSpec{"b", VariableFormat::binary, 0, 0, 6}, rng);
  EXPECT_TRUE(std::regex_match(b, std::regex("[0-9a-f]{12}")));
  auto p = draw(VariableSpec{"p", VariableFormat::dir_file, 0, 0, 0}, rng);
  EXPECT_TRUE(std::regex_match(p, std::regex("[a-z0-9]{8}/[a-z0-9]{8}\\.txt")));
  VersionSet family("php", {Version::parse("7.1.0"), Version::parse("7.2.0")});
  for (int i = 0; i < 20; ++i) {
    auto v = draw(VariableSpec{"v", VariableFormat::version, 0, 0, 0}, rng, &family);
    EXPECT_TRUE(v == "7.1.0" || v == "7.2.0") << v;
  }
}

TEST(Draw, SeededIsReproducibleSecureIsNot) {
  auto a = RandomnessSource::seeded(9), b = RandomnessSource::seeded(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  auto s = RandomnessSource::secure();
  EXPECT_FALSE(s.is_seeded());
  EXPECT_NE(s.next_u64(), s.next_u64());
}

TEST(Render, Substitutes) {
  EXPECT_EQ(render("d:#ax#e++2;", {{"ax", "314159"}}), "d:314159e++2;");
}

TEST(Render, NoPlaceholders) { EXPECT_EQ(render("phpinfo();", {}), "phpinfo();"); }

TEST(Render, Adjacent) { EXPECT_EQ(render("#a##b#", {{"a", "x"}, {"b", "y"}}), "xy"); }

TEST(Render, UnknownHashTextPassesThrough) {
  EXPECT_EQ(render("# comment #ax# #zz#", {{"ax", "1"}}), "# comment 1 #zz#");
}

TEST(Render, UnboundDeclaredNameThrows) {
  try {
    render("f(#ax#, #bx#);", Binding{{"ax", "1"}}, std::set<std::string>{"ax", "bx"});
    FAIL();
  } catch (const RenderError& e) {
    EXPECT_EQ(e.name(), "bx");
  }
}

TEST(Render, Wrap) {
  EXPECT_EQ(render("echo #a#;", {{"a", "1"}}, Wrap{"<?php ", " ?>"}), "<?php echo 1; ?>");
}

TEST(Render, Deterministic) {
  Binding b{{"ax", "7"}};
  EXPECT_EQ(render("#ax#-#ax#", b), render("#ax#-#ax#", b));
}

TEST(Judge, Examples) {
  auto ok = judge(std::string("bool(false)\n"), "bool(false)\n", 120ms, 200ms);
  EXPECT_TRUE(ok.delta);
  EXPECT_EQ(ok.reason, Reason::none);
  EXPECT_TRUE(judge(std::string("x"), "x", 200ms, 200ms).delta);
  auto late = judge(std::string("x"), "x", 201ms, 200ms);
  EXPECT_FALSE(late.delta);
  EXPECT_EQ(late.reason, Reason::timeout);
}

TEST(Judge, MismatchAndAbsent) {
  auto wrong = judge(std::string("float(3)\n"), "bool(false)\n", 1ms, 200ms);
  EXPECT_FALSE(wrong.delta);
  EXPECT_EQ(wrong.reason, Reason::mismatch);
  for (auto reason : {Reason::timeout, Reason::transport_error}) {
    auto absent = judge(std::nullopt, "", 0ms, 200ms, {}, reason);
    EXPECT_FALSE(absent.delta);
    EXPECT_EQ(absent.reason, reason);
  }
}

TEST(Judge, ExactBytes) {
  EXPECT_FALSE(judge(std::string("bool(false)"), "bool(false)\n", 1ms, 200ms).delta);
  EXPECT_TRUE(judge(std::string("<r>ok</r>"), "ok", 1ms, 200ms, Wrap{"<r>", "</r>"}).delta);
}

TEST(RenderTest, AppliesDatabaseTags) {
  auto db = testing::load_db("data/php-mini/database.json");
  const auto& t = *db.entry(Version::parse("7.2.0"));
  auto r = render_test(db, t, {{"ax", "42"}});
  EXPECT_EQ(r.challenge_payload, "<?php var_dump(@unserialize('d:42e++2;'));");
  EXPECT_EQ(r.expected_payload, "bool(false)\n");
  EXPECT_EQ(r.deadline, 200ms);
  EXPECT_EQ(r.challenge_interface, "ftp");
  EXPECT_EQ(r.response_interface, "http");
  EXPECT_EQ(r.challenge_payload.find('#'), std::string::npos);
}

}  // namespace
}  // namespace rfp
