#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "logbench/prompt_engine.hpp"
#include "test_support.hpp"

using namespace logbench;

namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::string(LOGBENCH_GOLDEN) + "/" + name, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Demonstration demo(std::string log, std::string tmpl) { return {0, std::move(log), Template::from_text(tmpl)}; }

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

ErrorKind error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::IoError;
}

}  // namespace

TEST(RenderPrompt, GoldenPT1) {
  auto p = render_prompt(PromptVariant::PT1, {}, "cupsd shutdown succeeded");
  EXPECT_EQ(p.rendered, golden("pt1.txt"));
  EXPECT_EQ(p.rendered.rfind("You will be provided with a log message delimited by backticks. You must abstract "
                             "variables with `{placeholders}'",
                             0),
            0u);
  EXPECT_TRUE(p.rendered.ends_with("Log message: `cupsd shutdown succeeded'"));
}

TEST(RenderPrompt, GoldenPT2) {
  auto p = render_prompt(PromptVariant::PT2,
                         {demo("Hello world", "Hello <*>"),
                          demo("Receiving block blk_-16 src: /10.0.0.1:5 dest: /10.0.0.2:50010",
                               "Receiving block <*> src: <*> dest: <*>")},
                         "Putting block rdd_0_1 with replication took 0");
  EXPECT_EQ(p.rendered, golden("pt2.txt"));
}

TEST(RenderPrompt, GoldenPT3AndPT4) {
  EXPECT_EQ(render_prompt(PromptVariant::PT3, {}, "cupsd shutdown succeeded").rendered, golden("pt3.txt"));
  EXPECT_EQ(render_prompt(PromptVariant::PT4, {}, "cupsd shutdown succeeded").rendered, golden("pt4.txt"));
}

TEST(RenderPrompt, SingleDemoLine) {
  auto p = render_prompt(PromptVariant::PT2, {demo("Hello world", "Hello <*>")}, "x");
  EXPECT_NE(p.rendered.find("\nThe template of `Hello world' is `Hello <*>'.\n"), std::string::npos);
  EXPECT_EQ(count_of(p.rendered, "The template of"), 1u);
}

TEST(RenderPrompt, ArityAndEmptyLog) {
  EXPECT_EQ(error_of([] { render_prompt(PromptVariant::PT3, {demo("a", "a")}, "x"); }), ErrorKind::ArityMismatch);
  EXPECT_EQ(error_of([] { render_prompt(PromptVariant::PT2, {}, "x"); }), ErrorKind::ArityMismatch);
  EXPECT_EQ(error_of([] { render_prompt(PromptVariant::PT1, {}, "  "); }), ErrorKind::EmptyLog);
}

TEST(RenderPrompt, QuotesInTargetPassThrough) {
  auto p = render_prompt(PromptVariant::PT1, {}, "it's `odd'");
  EXPECT_TRUE(p.rendered.ends_with("Log message: `it's `odd''"));
}

TEST(RenderPrompt, DemosAppearOnceInOrderAndTargetOnce) {
  auto ds = parse_dataset(testkit::structured_csv(testkit::synthetic_rows(500, 2)), "syn");
  auto demos = select_demonstrations(ds, 4, 99);
  const std::string target = "a unique target message 42";
  auto p = render_prompt(PromptVariant::PT2, demos, target);
  EXPECT_EQ(count_of(p.rendered, "The template of"), 4u);
  EXPECT_EQ(count_of(p.rendered, "`" + target + "'"), 1u);
  std::size_t last = 0;
  for (const auto& d : demos) {
    auto line = "The template of `" + d.log + "' is `" + d.template_.raw() + "'.";
    auto pos = p.rendered.find(line);
    ASSERT_NE(pos, std::string::npos);
    EXPECT_GE(pos, last);
    last = pos;
    EXPECT_EQ(count_of(p.rendered, line), 1u);
  }
  EXPECT_EQ(render_prompt(PromptVariant::PT2, demos, target).rendered, p.rendered);
}

TEST(SelectDemonstrations, ZeroShot) {
  auto ds = testkit::make_dataset({{"a", "A"}});
  EXPECT_TRUE(select_demonstrations(ds, 0, 1).empty());
}

TEST(SelectDemonstrations, OneShotPicksMostFrequentContent) {
  // Content counts: A x3, B x2, C x1.
  auto ds = testkit::make_dataset({{"B", "tb"}, {"A", "ta"}, {"C", "tc"}, {"A", "ta"}, {"B", "tb"}, {"A", "ta"}});
  auto demos = select_demonstrations(ds, 1, 0);
  ASSERT_EQ(demos.size(), 1u);
  EXPECT_EQ(demos[0].log, "A");
  EXPECT_EQ(demos[0].template_.raw(), "ta");
  EXPECT_EQ(demos[0].source_line, 2u);
}

TEST(SelectDemonstrations, OneShotTieGoesToSmallestLineId) {
  auto ds = testkit::make_dataset({{"y", "T"}, {"x", "T"}, {"x", "T"}, {"y", "T"}});
  EXPECT_EQ(select_demonstrations(ds, 1, 0)[0].log, "y");
}

TEST(SelectDemonstrations, InsufficientTemplates) {
  auto ds = testkit::make_dataset({{"a", "A"}, {"b", "B"}, {"b2", "B"}});
  EXPECT_EQ(error_of([&] { select_demonstrations(ds, 4, 0); }), ErrorKind::InsufficientTemplates);
  EXPECT_EQ(select_demonstrations(ds, 2, 0).size(), 2u);
}

TEST(SelectDemonstrations, FewShotDistinctGroupsSmallestMember) {
  auto ds = parse_dataset(testkit::structured_csv(testkit::synthetic_rows(2000, 4)), "syn");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t k : {2u, 4u}) {
      auto demos = select_demonstrations(ds, k, seed);
      ASSERT_EQ(demos.size(), k);
      std::set<std::string> templates;
      for (const auto& d : demos) {
        templates.insert(d.template_.raw());
        EXPECT_EQ(d.source_line, *ds.template_index.at(d.template_.raw()).begin());
      }
      EXPECT_EQ(templates.size(), k);
    }
  }
}

TEST(SelectDemonstrations, SeedStableAcrossRepeatedCalls) {
  auto ds = parse_dataset(testkit::structured_csv(testkit::synthetic_rows(2000, 4)), "syn");
  auto first = select_demonstrations(ds, 4, 1234);
  std::set<std::vector<LineId>> distinct_by_seed;
  for (int i = 0; i < 100; ++i) {
    auto again = select_demonstrations(ds, 4, 1234);
    ASSERT_EQ(again.size(), first.size());
    for (std::size_t j = 0; j < again.size(); ++j) EXPECT_EQ(again[j].source_line, first[j].source_line);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<LineId> ids;
    for (const auto& d : select_demonstrations(ds, 2, seed)) ids.push_back(d.source_line);
    distinct_by_seed.insert(ids);
  }
  EXPECT_GT(distinct_by_seed.size(), 1u);
}
