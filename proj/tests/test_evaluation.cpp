#include <set>

#include "doctest.h"
#include "storyreel/errors.hpp"
#include "storyreel/evaluation.hpp"
#include "test_support.hpp"

using namespace storyreel;
using testsupport::make_contract;
using testsupport::TempDir;
using nlohmann::json;

TEST_CASE("criterion names round-trip") {
  for (Criterion c : kAllCriteria)
    CHECK(criterion_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(criterion_from_string("vibes"), Error);
}

TEST_CASE("keyframe sampling spans the clip uniformly") {
  auto idx = sample_keyframes(16, 5.0);
  CHECK(idx == std::vector<int>{0, 2, 4, 6, 8, 10, 12, 15});

  // Duration clamps: below 8s floors to 8 frames, above 12s caps at 12.
  CHECK(sample_keyframes(100, 3.0).size() == 8);
  CHECK(sample_keyframes(100, 40.0).size() == 12);
  CHECK(sample_keyframes(100, 9.7).size() == 9);

  // Short clips clamp to their frame count; one frame yields index 0.
  CHECK(sample_keyframes(5, 10.0) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(sample_keyframes(1, 10.0) == std::vector<int>{0});
  CHECK_THROWS_AS(sample_keyframes(0, 10.0), Error);

  // First/last frames always included, indices strictly increasing.
  for (int fc : {2, 9, 75, 300}) {
    auto v = sample_keyframes(fc, 10.0);
    CHECK(v.front() == 0);
    CHECK(v.back() == fc - 1);
    for (size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
  }
}

TEST_CASE("judge prompt leads with the evaluator role and attaches keyframes") {
  auto turns = build_judge_prompt(Criterion::VideoQuality,
                                  {"kf/0.png", "kf/1.png"}, "a storm scene",
                                  testsupport::template_dir());
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].speaker == ChatTurn::Speaker::System);
  CHECK(turns[0].content.find("evaluation expert") != std::string::npos);
  CHECK(turns[1].image_paths == std::vector<std::string>{"kf/0.png", "kf/1.png"});
  // Rubric order inside the user turn: criterion before rubric before format.
  const auto& body = turns[1].content;
  auto pos_criterion = body.find("Criterion: Video Quality");
  auto pos_rubric = body.find("Scoring rubric");
  auto pos_format = body.find("Output format");
  REQUIRE(pos_criterion != std::string::npos);
  REQUIRE(pos_rubric != std::string::npos);
  REQUIRE(pos_format != std::string::npos);
  CHECK(pos_criterion < pos_rubric);
  CHECK(pos_rubric < pos_format);
  CHECK_THROWS_AS(build_judge_prompt(Criterion::VideoQuality, {}, "ctx",
                                     testsupport::template_dir()),
                  Error);
}

TEST_CASE("judge parses a valid score and records the evaluator") {
  Gateway gateway;
  gateway.set_transport(
      Role::Judge,
      std::make_shared<MockTransport>(json::array(
          {{{"substring", "storm scene"},
            {"response", "{\"score\": 4, \"explanation\": \"coherent\"}"}}})));
  auto prompt = build_judge_prompt(Criterion::ScriptConsistency, {"kf/0.png"},
                                   "a storm scene", testsupport::template_dir());
  auto score = judge(gateway, make_contract(Role::Judge), prompt, "judge-1",
                     Criterion::ScriptConsistency);
  CHECK(score.score == 4);
  CHECK(score.evaluator_id == "judge-1");
  CHECK(score.explanation == "coherent");
}

TEST_CASE("out-of-range score re-prompts once, then the cell is an error") {
  Gateway gateway;
  gateway.set_transport(
      Role::Judge, std::make_shared<MockTransport>(json::array(
                       {{{"substring", "storm scene"},
                         {"response", "{\"score\": 7}"},
                         {"reusable", true}}})));
  auto prompt = build_judge_prompt(Criterion::VideoQuality, {"kf/0.png"},
                                   "a storm scene", testsupport::template_dir());
  CHECK_THROWS_AS(judge(gateway, make_contract(Role::Judge), prompt, "judge-1",
                        Criterion::VideoQuality),
                  EvalError);
  CHECK(gateway.request_count() == 2);
}

TEST_CASE("judge demands the judge role") {
  Gateway gateway;
  CHECK_THROWS_AS(judge(gateway, make_contract(Role::Chat),
                        {{ChatTurn::Speaker::User, "x", {}}}, "e",
                        Criterion::VideoQuality),
                  ConfigError);
}

TEST_CASE("aggregate rounds half-up at two decimals") {
  CHECK(aggregate({4.50, 4.00, 3.20}) == doctest::Approx(3.90).epsilon(1e-12));
  CHECK(aggregate({3.33, 3.00, 2.17}) == doctest::Approx(2.83).epsilon(1e-12));
  CHECK(aggregate({1.0, 2.0}) == doctest::Approx(1.50).epsilon(1e-12));
  CHECK(aggregate({0.005}) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate({}), EvalError);
}

TEST_CASE("report renders averages and missing counts") {
  EvalReport report;
  report.granularity = "film";
  EvalCell cell;
  cell.scores = {{"e1", Criterion::ScriptConsistency, 4, ""},
                 {"e2", Criterion::ScriptConsistency, 5, ""}};
  cell.average = aggregate({4, 5});
  cell.missing = 1;
  report.cells["ours"]["script_consistency"] = cell;
  auto table = render_report_table(report);
  CHECK(table.find("ours") != std::string::npos);
  CHECK(table.find("4.50") != std::string::npos);
  CHECK(table.find("(1 missing)") != std::string::npos);
  CHECK(table.find("absent") != std::string::npos);  // unjudged criteria
  auto j = json::parse(report_to_json(report));
  CHECK(j.at("methods").at("ours").at("script_consistency").at("average") == 4.5);
  CHECK(j.at("granularity") == "film");
}

TEST_CASE("questionnaire blinds methods behind per-case shuffled labels") {
  std::vector<std::string> methods = {"ours", "base-a", "base-b", "base-c"};
  std::vector<std::string> cases;
  for (int i = 1; i <= 10; ++i) cases.push_back("case" + std::to_string(i));
  auto q = gen_questionnaire(methods, cases, 7, testsupport::template_dir());

  // The printable document never names a method.
  for (const auto& m : methods)
    CHECK(q.document.find(m) == std::string::npos);
  // Every question from the question bank appears per case.
  CHECK(q.document.find("Case case10") != std::string::npos);

  // The key is a complete bijection per case.
  auto key = json::parse(q.key_json);
  REQUIRE(key.size() == 10);
  std::set<std::string> orders;
  for (const auto& [case_id, mapping] : key.items()) {
    REQUIRE(mapping.size() == methods.size());
    std::set<std::string> seen;
    std::string order;
    for (const auto& [label, method] : mapping.items()) {
      CHECK(label.size() == 1);
      CHECK(label[0] >= 'A');
      CHECK(label[0] < static_cast<char>('A' + methods.size()));
      seen.insert(method.get<std::string>());
      order += method.get<std::string>() + "|";
    }
    CHECK(seen == std::set<std::string>(methods.begin(), methods.end()));
    orders.insert(order);
  }
  // With 10 cases over 24 permutations, at least two distinct orders.
  CHECK(orders.size() >= 2);

  // Determinism: same seed, same document and key.
  auto q2 = gen_questionnaire(methods, cases, 7, testsupport::template_dir());
  CHECK(q2.document == q.document);
  CHECK(q2.key_json == q.key_json);

  CHECK_THROWS_AS(gen_questionnaire({"only"}, cases, 7,
                                    testsupport::template_dir()),
                  Error);
}

TEST_CASE("metric CSV round-trips under the declared header") {
  TempDir dir;
  util::atomic_write(dir.path() / "m.csv",
                     "Method,CLIP-T,Subj.,Bg.,Motion,Dyn.,Aesth.\n"
                     "ours,29.61,79.54,96.26,99.32,80.00,69.51\n");
  auto table = import_external_metrics(dir.path() / "m.csv");
  CHECK(table.rows.at("ours").at("CLIP-T") == doctest::Approx(29.61));
  CHECK(table.rows.at("ours").at("Aesth.") == doctest::Approx(69.51));
  CHECK(table.columns == kExternalMetricColumns);
}

TEST_CASE("metric CSV header mismatch names the columns") {
  TempDir dir;
  util::atomic_write(dir.path() / "m.csv",
                     "Method,CLIP-T,Subject,Bg.,Motion,Dyn.,Aesth.\n");
  try {
    import_external_metrics(dir.path() / "m.csv");
    FAIL("expected Error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("'Subj.'") != std::string::npos);
    CHECK(what.find("'Subject'") != std::string::npos);
  }

  util::atomic_write(dir.path() / "bad.csv",
                     "Method,CLIP-T,Subj.,Bg.,Motion,Dyn.,Aesth.\n"
                     "ours,29.61,xx,96.26,99.32,80.00,69.51\n");
  CHECK_THROWS_AS(import_external_metrics(dir.path() / "bad.csv"), Error);
}
