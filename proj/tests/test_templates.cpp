#include <cstdlib>

#include "doctest.h"
#include "storyreel/errors.hpp"
#include "storyreel/prompt_template.hpp"
#include "storyreel/util.hpp"
#include "test_support.hpp"

using namespace storyreel;

namespace {

// Pins rendered prompts byte-exactly. Set STORYREEL_UPDATE_GOLDEN=1 to
// regenerate after an intentional template change.
void check_golden(const std::string& name, const std::string& rendered) {
  const std::filesystem::path golden =
      std::filesystem::path(STORYREEL_GOLDEN_DIR) / (name + ".txt");
  if (std::getenv("STORYREEL_UPDATE_GOLDEN")) {
    util::atomic_write(golden, rendered);
    return;
  }
  REQUIRE_MESSAGE(std::filesystem::exists(golden),
                  "missing golden file " << golden.string()
                                         << "; run with STORYREEL_UPDATE_GOLDEN=1");
  CHECK_MESSAGE(util::read_file(golden) == rendered,
                "rendered prompt drifted from golden " << golden.string());
}

}  // namespace

TEST_CASE("render fails on an unbound required placeholder") {
  auto tmpl = PromptTemplate::load(testsupport::template_dir() / "director" /
                                   "expand_script.json");
  CHECK_THROWS_AS(tmpl.render({{"title", "t"}}), Error);
}

TEST_CASE("chat templates carry the stepwise reasoning instruction") {
  for (const char* rel :
       {"director/expand_script.json", "director/decompose_scenes.json",
        "cinematography/first_shot.json", "cinematography/next_shot.json",
        "cinematography/injection.json"}) {
    auto tmpl = PromptTemplate::load(testsupport::template_dir() / rel);
    CHECK(tmpl.requires_reasoning);
  }
}

TEST_CASE("golden: expand_script prompt") {
  auto tmpl = PromptTemplate::load(testsupport::template_dir() / "director" /
                                   "expand_script.json");
  check_golden("expand_script",
               tmpl.render({{"title", "The Valley"},
                            {"outline", "A ranger and a wolf guard a valley."},
                            {"character_profiles", "- Mara: a ranger\n"}}));
}

TEST_CASE("golden: first and next shot prompts") {
  auto first = PromptTemplate::load(testsupport::template_dir() /
                                    "cinematography" / "first_shot.json");
  auto next = PromptTemplate::load(testsupport::template_dir() /
                                   "cinematography" / "next_shot.json");
  check_golden("first_shot", first.render({{"script", "SCRIPT BLOCK"},
                                           {"scene", "SCENE BLOCK"}}));
  check_golden("next_shot", next.render({{"script", "SCRIPT BLOCK"},
                                         {"scene", "SCENE BLOCK"},
                                         {"previous_shot", "PREVIOUS CONTENT"}}));
}

TEST_CASE("golden: injection prompt") {
  auto tmpl = PromptTemplate::load(testsupport::template_dir() /
                                   "cinematography" / "injection.json");
  check_golden("injection", tmpl.render({{"content", "Mara crests the ridge."},
                                         {"characters", "Mara; "}}));
}
