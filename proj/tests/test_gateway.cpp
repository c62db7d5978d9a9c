#include "doctest.h"
#include "storyreel/errors.hpp"
#include "storyreel/gateway.hpp"
#include "test_support.hpp"

using namespace storyreel;
using testsupport::make_contract;
using nlohmann::json;

TEST_CASE("mock substring matcher returns the scripted response verbatim") {
  Gateway gateway;
  gateway.set_transport(Role::Chat, std::make_shared<MockTransport>(json::array(
                                        {{{"substring", "hello"},
                                          {"response", "scripted reply"}}})));
  auto contract = make_contract(Role::Chat);
  CHECK(gateway.chat(contract, {{ChatTurn::Speaker::User, "hello there", {}}}) ==
        "scripted reply");
}

TEST_CASE("empty mock script fails any request") {
  Gateway gateway;
  gateway.set_transport(Role::Chat,
                        std::make_shared<MockTransport>(json::array()));
  auto contract = make_contract(Role::Chat);
  CHECK_THROWS_AS(
      gateway.chat(contract, {{ChatTurn::Speaker::User, "anything", {}}}),
      MockError);
}

TEST_CASE("mock position matcher fires on the nth request") {
  Gateway gateway;
  gateway.set_transport(
      Role::Chat, std::make_shared<MockTransport>(json::array(
                      {{{"position", 2}, {"response", "second"}},
                       {{"substring", "x"}, {"response", "first"}}})));
  auto contract = make_contract(Role::Chat);
  CHECK(gateway.chat(contract, {{ChatTurn::Speaker::User, "x", {}}}) == "first");
  CHECK(gateway.chat(contract, {{ChatTurn::Speaker::User, "x", {}}}) == "second");
}

TEST_CASE("transient failures retry with a success on attempt 3") {
  Gateway gateway;
  gateway.set_sleeper([](double) {});
  auto flaky = std::make_shared<testsupport::FlakyTransport>(2, "ok");
  gateway.set_transport(Role::Chat, flaky);
  auto contract = make_contract(Role::Chat);
  contract.max_retries = 3;
  CHECK(gateway.chat(contract, {{ChatTurn::Speaker::User, "go", {}}}) == "ok");
  CHECK(flaky->attempts == 3);
}

TEST_CASE("retries exhaust into a transport error") {
  Gateway gateway;
  gateway.set_sleeper([](double) {});
  auto flaky = std::make_shared<testsupport::FlakyTransport>(10, "ok");
  gateway.set_transport(Role::Chat, flaky);
  auto contract = make_contract(Role::Chat);
  contract.max_retries = 2;
  CHECK_THROWS_AS(gateway.chat(contract, {{ChatTurn::Speaker::User, "go", {}}}),
                  TransportError);
  CHECK(flaky->attempts == 3);  // 1 attempt + 2 retries
}

TEST_CASE("run log keeps one entry per issued request, in order") {
  Gateway gateway;
  gateway.set_transport(Role::Chat, std::make_shared<MockTransport>(json::array(
                                        {{{"substring", "a"},
                                          {"response", "ra"},
                                          {"reusable", true}}})));
  auto contract = make_contract(Role::Chat);
  gateway.set_stage("alpha");
  gateway.chat(contract, {{ChatTurn::Speaker::User, "a1", {}}});
  gateway.set_stage("beta");
  gateway.chat(contract, {{ChatTurn::Speaker::User, "a2", {}}});
  REQUIRE(gateway.run_log().size() == 2);
  CHECK(gateway.run_log()[0].stage == "alpha");
  CHECK(gateway.run_log()[1].stage == "beta");
  CHECK(gateway.request_count("alpha") == 1);
  CHECK(gateway.request_count() == 2);
}

TEST_CASE("generate_image writes mock bytes deterministically") {
  testsupport::TempDir dir;
  Gateway gateway;
  gateway.set_transport(Role::T2I, std::make_shared<MockTransport>(json::array(
                                       {{{"substring", "portrait"},
                                         {"response", "PNGBYTES"},
                                         {"reusable", true}}})));
  auto contract = make_contract(Role::T2I);
  auto a1 = gateway.generate_image(contract, "portrait of Mara",
                                   dir.path() / "a.png");
  auto a2 = gateway.generate_image(contract, "portrait of Mara",
                                   dir.path() / "b.png");
  CHECK(util::read_file(a1.image_path) == "PNGBYTES");
  CHECK(util::read_file(a1.image_path) == util::read_file(a2.image_path));
  CHECK(a1.prompt_used == "portrait of Mara");
}

TEST_CASE("generate_video populates the record via the probe") {
  testsupport::TempDir dir;
  Gateway gateway;
  gateway.set_transport(Role::I2V, std::make_shared<MockTransport>(json::array(
                                       {{{"substring", "storm"},
                                         {"response", "CLIPBYTES"}}})));
  auto contract = make_contract(Role::I2V);
  auto probe = [](const std::filesystem::path&, ClipRecord& r) {
    r.width = 832;
    r.height = 480;
    r.fps = 15.0;
    r.frame_count = 75;
  };
  auto record =
      gateway.generate_video(contract, "storm over the valley", {},
                             dir.path() / "clip.mp4", probe);
  CHECK(record.width == 832);
  CHECK(record.height == 480);
  CHECK(record.fps == 15.0);
  CHECK(record.frame_count == 75);
  CHECK(record.status == ClipStatus::Rendered);
}

TEST_CASE("generate_video rejects a missing reference before any call") {
  testsupport::TempDir dir;
  Gateway gateway;
  auto capture = std::make_shared<testsupport::CaptureTransport>(
      std::make_shared<MockTransport>(json::array()));
  gateway.set_transport(Role::I2V, capture);
  auto contract = make_contract(Role::I2V);
  CHECK_THROWS_AS(gateway.generate_video(contract, "x",
                                         {dir.path() / "missing.png"},
                                         dir.path() / "c.mp4", {}),
                  Error);
  CHECK(capture->requests.empty());
}

TEST_CASE("extract_structured handles fenced JSON") {
  auto j = extract_structured("```json\n{\"score\": 4}\n```");
  CHECK(j.at("score") == 4);
}

TEST_CASE("extract_structured finds the first balanced object amid prose") {
  auto j = extract_structured("prose then {\"a\": {\"b\": 1}} trailing");
  CHECK(j.at("a").at("b") == 1);
  // Oracle: a hand-rolled balanced-brace scan over the same text agrees.
  const std::string text = "prose then {\"a\": {\"b\": 1}} trailing";
  size_t start = text.find('{');
  int depth = 0;
  size_t end = 0;
  for (size_t i = start; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) {
      end = i;
      break;
    }
  }
  CHECK(j == nlohmann::json::parse(text.substr(start, end - start + 1)));
}

TEST_CASE("extract_structured errors carry the raw text") {
  try {
    extract_structured("no braces here");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.raw == "no braces here");
  }
}

TEST_CASE("extract_structured is idempotent on its own output") {
  auto j = extract_structured("junk {\"k\": [1, 2]} junk");
  CHECK(extract_structured(j.dump()) == j);
}

TEST_CASE("extract_structured ignores braces inside strings") {
  auto j = extract_structured("{\"s\": \"curly } inside\", \"n\": 2}");
  CHECK(j.at("n") == 2);
}
