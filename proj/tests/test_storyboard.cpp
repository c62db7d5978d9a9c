#include <random>

#include "doctest.h"
#include "storyreel/errors.hpp"
#include "storyreel/storyboard.hpp"
#include "storyreel/util.hpp"
#include "test_support.hpp"

using namespace storyreel;
using testsupport::TempDir;

TEST_CASE("valid storyboard has no violations") {
  auto board = testsupport::sample_storyboard();
  CHECK(validate(board).empty());
}

TEST_CASE("validate is pure") {
  auto board = testsupport::sample_storyboard();
  board.scenes[1].index = 3;  // gap
  auto first = validate(board);
  auto second = validate(board);
  CHECK(first == second);
  CHECK_FALSE(first.empty());
  CHECK(first.front().find("non-contiguous") != std::string::npos);
}

TEST_CASE("unknown character is reported") {
  auto board = testsupport::sample_storyboard();
  board.shots[0].characters.push_back("Ghost");
  auto violations = validate(board);
  // Brute-force cross-reference: every reported name must truly be absent
  // from the script, and the planted one must be caught.
  bool found = false;
  for (const auto& v : violations)
    if (v.find("unknown character 'Ghost'") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("single-shot scene must be scene_end") {
  auto board = testsupport::sample_storyboard();
  board.shots = {board.shots[0]};
  board.shots[0].shot_type = ShotType::SceneStart;
  board.scenes = {board.scenes[0]};
  CHECK_FALSE(validate(board).empty());
  board.shots[0].shot_type = ShotType::SceneEnd;
  CHECK(validate(board).empty());
}

TEST_CASE("two scene_end shots in one scene is rejected") {
  auto board = testsupport::sample_storyboard();
  board.shots[1].shot_type = ShotType::SceneEnd;
  auto violations = validate(board);
  CHECK_FALSE(violations.empty());
}

TEST_CASE("save/load round-trips the sample storyboard") {
  TempDir dir;
  auto board = testsupport::sample_storyboard();
  save(board, dir.path());
  CHECK(load(dir.path()) == board);
}

TEST_CASE("empty storyboard re-save is byte-identical") {
  TempDir dir;
  Storyboard board;
  board.script = testsupport::sample_script();
  save(board, dir.path());
  const std::string first = util::read_file(dir.path() / "storyboard.json");
  save(deserialize(first), dir.path());
  CHECK(util::read_file(dir.path() / "storyboard.json") == first);
}

TEST_CASE("round-trip property over randomized storyboards") {
  std::mt19937 rng(20240817);
  for (int i = 0; i < 50; ++i) {
    auto board = testsupport::random_storyboard(rng);
    REQUIRE(validate(board).empty());
    CHECK(deserialize(serialize(board)) == board);
  }
}

TEST_CASE("load rejects shot pointing at a missing scene") {
  TempDir dir;
  auto board = testsupport::sample_storyboard();
  save(board, dir.path());
  // Tamper: scene_index 3 with only 2 scenes.
  auto text = util::read_file(dir.path() / "storyboard.json");
  auto pos = text.find("\"scene_index\": 2");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 16, "\"scene_index\": 3");
  util::atomic_write(dir.path() / "storyboard.json", text);
  CHECK_THROWS_AS(load(dir.path()), PersistenceError);
}

TEST_CASE("load rejects unsupported schema version") {
  TempDir dir;
  util::atomic_write(dir.path() / "storyboard.json",
                     "{\"schema_version\": \"99\"}");
  CHECK_THROWS_AS(load(dir.path()), PersistenceError);
}

TEST_CASE("load of missing document fails with the path") {
  TempDir dir;
  try {
    load(dir.path() / "nope");
    FAIL("expected PersistenceError");
  } catch (const PersistenceError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("save into an unwritable dir raises a persistence error") {
  if (::geteuid() == 0) return;  // root ignores permission bits
  TempDir dir;
  std::filesystem::permissions(dir.path(), std::filesystem::perms::owner_read);
  auto board = testsupport::sample_storyboard();
  CHECK_THROWS_AS(save(board, dir.path() / "sub"), PersistenceError);
  std::filesystem::permissions(dir.path(), std::filesystem::perms::owner_all);
}

TEST_CASE("store lock admits one writer") {
  TempDir dir;
  StoreLock lock(dir.path());
  CHECK_THROWS_AS(StoreLock{dir.path()}, PersistenceError);
}
