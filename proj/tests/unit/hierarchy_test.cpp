#include "rfp/hierarchy.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include "support.hpp"

namespace rfp {
namespace {

Version V(const char* s) { return Version::parse(s); }

class MiniHierarchy : public ::testing::Test {
 protected:
  Database db = testing::load_db("data/php-mini/database.json");
  Hierarchy h{db};

  std::vector<std::string> passing(const Version& w) {
    std::vector<std::string> out;
    for (const auto& v : db.family()) {
      if (h.region(w).contains(v)) out.push_back(v.raw());
    }
    return out;
  }
};

TEST_F(MiniHierarchy, IntrinsicIsCumulative) {
  EXPECT_TRUE(h.region(V("7.2.0")).is_upset());
  EXPECT_EQ(passing(V("7.2.0")),
            (std::vector<std::string>{"7.2.0", "7.2.1", "7.2.2", "7.2.8", "7.2.9", "7.2.11",
                                      "7.2.14", "7.3.0rc4"}));
}

TEST_F(MiniHierarchy, BranchedFunctionForksAtThePeer) {
  EXPECT_FALSE(h.region(V("7.0.15")).is_upset());
  EXPECT_EQ(h.peer_group(V("7.0.15")), (std::vector<Version>{V("7.0.15"), V("7.1.1")}));
  auto got = passing(V("7.0.15"));
  // 7.1.0 sits above 7.0.15 numerically but lacks the function.
  EXPECT_EQ(std::count(got.begin(), got.end(), "7.1.0"), 0);
  EXPECT_EQ(std::count(got.begin(), got.end(), "7.0.22"), 1);
  EXPECT_EQ(std::count(got.begin(), got.end(), "7.1.1"), 1);
  EXPECT_EQ(std::count(got.begin(), got.end(), "7.0.0"), 0);
}

TEST_F(MiniHierarchy, DeprecatedWindow) {
  EXPECT_EQ(passing(V("7.0.26")), std::vector<std::string>{"7.0.26"});
}

TEST_F(MiniHierarchy, PlanHoldsOnlyFromTheEntryUpward) {
  const auto& plan = h.plan(V("7.1.1"));
  EXPECT_FALSE(h.plan_holds(plan, V("7.1.0")));
  EXPECT_FALSE(h.plan_holds(plan, V("7.0.26")));
  EXPECT_TRUE(h.plan_holds(plan, V("7.1.1")));
  EXPECT_TRUE(h.plan_holds(plan, V("7.2.14")));
}

TEST_F(MiniHierarchy, PredictionShortCircuits) {
  const auto& plan = h.plan(V("7.1.1"));  // [7.1.0, 7.0.15]
  EXPECT_EQ(h.predicted_outcomes(plan, V("7.0.22")), std::vector<bool>{false});
  EXPECT_EQ(h.predicted_outcomes(plan, V("7.1.0")), (std::vector<bool>{true, false}));
  EXPECT_EQ(h.predicted_outcomes(plan, V("7.2.0")), (std::vector<bool>{true, true}));
}

TEST_F(MiniHierarchy, EveryPlanHoldsAtItsOwnVersion) {
  EXPECT_TRUE(hierarchy_problems(db).empty());
  for (const auto& v : db.family()) {
    const auto& plan = h.plan(v);
    if (!plan.empty()) EXPECT_TRUE(h.plan_holds(plan, v)) << v.raw();
  }
}

TEST(HierarchyProblems, TwoPeerReferencesOnOneEntry) {
  auto doc = nlohmann::ordered_json::parse(
      testing::read_file(testing::source_path("tests/fixtures/listing2.json")));
  auto& vs = doc["service"]["versions"];
  vs["7.0.0"] = vs["7.1.0"];
  vs["7.0.0"]["test"]["challenge"]["payload"] = "echo probe_700(#ax#);";
  vs["7.0.3"] = vs["7.1.0"];
  vs["7.0.3"]["test"]["challenge"]["payload"] = "echo probe_703(#ax#);";
  vs["7.2.5"] = {{"test", {{"branching", {{"7.2.0", "1"}, {"7.0.3", "1"}, {"7.1.24", "1"}}}}}};
  auto db = load_database(doc.dump());
  auto problems = hierarchy_problems(db);
  ASSERT_FALSE(problems.empty());
  EXPECT_NE(problems[0].find("7.2.5"), std::string::npos);
  EXPECT_FALSE(validate_strategy_independence(db).ok());
}

}  // namespace
}  // namespace rfp
