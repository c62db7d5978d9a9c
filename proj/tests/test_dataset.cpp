#include <fstream>

#include "doctest.h"
#include "storyreel/dataset.hpp"
#include "storyreel/errors.hpp"
#include "test_support.hpp"

using namespace storyreel;
using testsupport::make_contract;
using nlohmann::json;

namespace {

DatasetBuilder make_builder(Gateway& gateway, const json& entries) {
  gateway.set_transport(Role::Chat, std::make_shared<MockTransport>(entries));
  return DatasetBuilder(gateway, make_contract(Role::Chat),
                        make_contract(Role::Chat),
                        {testsupport::template_dir()});
}

ShotAnnotation annotation_fixture() {
  ShotAnnotation a;
  a.clip_id = "c1";
  a.shot_size = "medium close-up";
  a.camera_motion = "slow dolly-in";
  a.lighting = "low-key lighting";
  return a;
}

}  // namespace

TEST_CASE("stoplist matches whole words only") {
  DatasetConfig cfg;
  CHECK(hits_stoplist("a wide shot of the barn", cfg.stoplist));
  CHECK(hits_stoplist("the Close-Up lingers", cfg.stoplist));
  CHECK_FALSE(hits_stoplist("gunshots echo worldwide", cfg.stoplist));
  CHECK_FALSE(hits_stoplist("a panda eats bamboo", cfg.stoplist));
  CHECK_FALSE(hits_stoplist("", cfg.stoplist));
}

TEST_CASE("annotation serialization keeps declaration order") {
  CHECK(serialize_annotation(annotation_fixture()) ==
        "shot_size=medium close-up, camera_motion=slow dolly-in, "
        "lighting=low-key lighting");
  CHECK(serialize_annotation({}) == "");
}

TEST_CASE("caption_clip accepts a clean description") {
  Gateway gateway;
  auto builder = make_builder(
      gateway, json::array({{{"substring", "frames/c1_0.png"},
                             {"response", "A woman walks through tall grass."}}}));
  CHECK(builder.caption_clip({"frames/c1_0.png", "frames/c1_1.png"}) ==
        "A woman walks through tall grass.");
  CHECK(gateway.request_count() == 1);
}

TEST_CASE("caption with camera vocabulary re-prompts once then rejects") {
  Gateway gateway;
  auto builder = make_builder(
      gateway,
      json::array({{{"substring", "frames/c1_0.png"},
                    {"response", "A wide shot of a woman in grass."},
                    {"reusable", true}}}));
  CHECK_THROWS_AS(builder.caption_clip({"frames/c1_0.png"}), RecordError);
  CHECK(gateway.request_count() == 2);
}

TEST_CASE("caption re-prompt recovers when the retry is clean") {
  Gateway gateway;
  auto builder = make_builder(
      gateway,
      json::array({{{"substring", "frames/c1_0.png"},
                    {"response", "A slow pan over a barn."}},
                   {{"substring", "avoid all camera"},
                    {"response", "A barn stands in morning mist."}}}));
  CHECK(builder.caption_clip({"frames/c1_0.png"}) ==
        "A barn stands in morning mist.");
}

TEST_CASE("enrich_caption requires every annotated value, case-insensitively") {
  Gateway gateway;
  auto builder = make_builder(
      gateway,
      json::array({{{"substring", "tall grass"},
                    {"response",
                     "A Medium Close-Up on the woman in tall grass; a Slow "
                     "Dolly-In under LOW-KEY LIGHTING."}}}));
  auto y = builder.enrich_caption("A woman walks through tall grass.",
                                  annotation_fixture());
  CHECK(y.find("Dolly-In") != std::string::npos);
}

TEST_CASE("enrich_caption that drops a value fails after one re-prompt") {
  Gateway gateway;
  auto builder = make_builder(
      gateway,
      json::array({{{"substring", "tall grass"},
                    {"response", "A medium close-up in tall grass."},
                    {"reusable", true}}}));
  CHECK_THROWS_AS(builder.enrich_caption("A woman walks through tall grass.",
                                         annotation_fixture()),
                  RecordError);
  CHECK(gateway.request_count() == 2);
}

namespace {

// Corpus manifest with `n` clips plus scripted mock replies for each.
void write_corpus(const std::filesystem::path& dir, int n, json& entries,
                  int bad_at = -1) {
  json corpus;
  corpus["clips"] = json::array();
  for (int i = 0; i < n; ++i) {
    const std::string id = "clip" + std::to_string(i);
    corpus["clips"].push_back(
        {{"clip_id", id},
         {"frames", {"frames/" + id + ".png"}},
         {"annotation",
          {{"shot_size", "wide shot " + std::to_string(i)},
           {"lighting", "soft light " + std::to_string(i)}}}});
    const bool bad = i == bad_at;
    entries.push_back(
        {{"substring", "frames/" + id + ".png"},
         {"response", bad ? "A dolly glides past subject " + std::to_string(i)
                          : "A subject number " + std::to_string(i) + " waits."},
         {"reusable", true}});
    entries.push_back(
        {{"substring", "subject number " + std::to_string(i)},
         {"response", "A wide shot " + std::to_string(i) + " of subject number " +
                          std::to_string(i) + " under soft light " +
                          std::to_string(i) + "."}});
  }
  storyreel::util::atomic_write(dir / "corpus.json", corpus.dump(2));
}

}  // namespace

TEST_CASE("build_dataset emits one JSONL record per clip with a manifest") {
  testsupport::TempDir dir;
  Gateway gateway;
  json entries = json::array();
  write_corpus(dir.path(), 4, entries);
  auto builder = make_builder(gateway, entries);
  auto manifest =
      builder.build_dataset(dir.path() / "corpus.json", dir.path() / "data.jsonl");

  CHECK(manifest.pair_count == 4);
  CHECK(manifest.skip_count == 0);
  CHECK(manifest.hyperparameters.at("adapter_rank") == "8");
  CHECK(manifest.hyperparameters.at("adapter_scale") == "32");
  CHECK(manifest.hyperparameters.at("learning_rate") == "1e-4");
  CHECK(manifest.hyperparameters.at("epochs") == "20");
  CHECK(manifest.hyperparameters.at("target_layers") == "all linear layers");
  CHECK(manifest.dataset_digest ==
        util::sha256_file_hex(dir.path() / "data.jsonl"));

  // Every line holds both halves of the pair plus the annotation.
  std::ifstream in(dir.path() / "data.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    auto record = json::parse(line);
    CHECK(record.at("instruction").get<std::string>().find("Description: ") !=
          std::string::npos);
    CHECK(record.at("instruction").get<std::string>().find("Attributes: ") !=
          std::string::npos);
    CHECK_FALSE(record.at("response").get<std::string>().empty());
    ++lines;
  }
  CHECK(lines == 4);
  CHECK(validate_dataset_file(dir.path() / "data.jsonl", DatasetConfig{}.stoplist)
            .empty());

  write_manifest(manifest, dir.path() / "manifest.json");
  auto reread = read_manifest(dir.path() / "manifest.json");
  CHECK(reread.pair_count == manifest.pair_count);
  CHECK(reread.hyperparameters == manifest.hyperparameters);
  CHECK(reread.dataset_digest == manifest.dataset_digest);
}

TEST_CASE("a persistently bad clip is skipped and tallied") {
  testsupport::TempDir dir;
  Gateway gateway;
  json entries = json::array();
  write_corpus(dir.path(), 3, entries, /*bad_at=*/1);
  auto builder = make_builder(gateway, entries);
  auto manifest =
      builder.build_dataset(dir.path() / "corpus.json", dir.path() / "data.jsonl");
  CHECK(manifest.pair_count == 2);
  CHECK(manifest.skip_count == 1);
}

TEST_CASE("validator flags a tampered record") {
  testsupport::TempDir dir;
  json good = {{"clip_id", "g"},
               {"ordinary_caption", "A dog runs."},
               {"response", "A wide shot of a dog running."},
               {"annotation", {{"shot_size", "wide shot"}}}};
  json leaky = {{"clip_id", "leaky"},
                {"ordinary_caption", "A slow pan over a dog."},
                {"response", "A wide shot of a dog."},
                {"annotation", {{"shot_size", "wide shot"}}}};
  json uncovered = {{"clip_id", "uncovered"},
                    {"ordinary_caption", "A dog runs."},
                    {"response", "A dog runs happily."},
                    {"annotation", {{"shot_size", "wide shot"}}}};
  util::atomic_write(dir.path() / "d.jsonl", good.dump() + "\n" + leaky.dump() +
                                                 "\n" + uncovered.dump() + "\n");
  auto violations =
      validate_dataset_file(dir.path() / "d.jsonl", DatasetConfig{}.stoplist);
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].find("leaky") != std::string::npos);
  CHECK(violations[1].find("uncovered") != std::string::npos);
}
