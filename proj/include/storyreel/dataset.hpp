#ifndef STORYREEL_DATASET_HPP_
#define STORYREEL_DATASET_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "storyreel/gateway.hpp"

namespace storyreel {

// Builds the cinematic-language instruction-tuning dataset: plain caption +
// shot annotation in, enriched caption out, one JSONL record per clip. The
// fine-tune itself runs externally off the emitted manifest.

struct ShotAnnotation {
  std::string clip_id;
  std::string shot_size;
  std::string camera_angle;
  std::string framing;
  std::string camera_motion;
  std::string lighting;

  // Present (non-empty) field values, in declaration order.
  std::vector<std::pair<std::string, std::string>> present_fields() const;
  bool empty() const { return present_fields().empty(); }
};

struct TrainingPair {
  std::string clip_id;
  std::string ordinary_caption;
  ShotAnnotation annotation;
  std::string cinematic_caption;
};

struct FineTuneManifest {
  int pair_count = 0;
  int skip_count = 0;
  std::string objective_note;
  std::map<std::string, std::string> hyperparameters;
  std::string dataset_path;
  std::string dataset_digest;
};

struct CorpusClip {
  std::string clip_id;
  std::vector<std::string> frame_paths;
  ShotAnnotation annotation;
};

struct DatasetConfig {
  std::filesystem::path template_dir;
  // Vocabulary that must not appear in ordinary captions.
  std::vector<std::string> stoplist = {
      "shot",  "close-up", "wide",    "pan",      "tilt",     "zoom",
      "dolly", "tracking", "angle",   "framing",  "lighting", "lens"};
};

// True if any stoplist token occurs in `text` as a whole word.
bool hits_stoplist(const std::string& text, const std::vector<std::string>& stoplist);

class DatasetBuilder {
 public:
  DatasetBuilder(Gateway& gateway, EndpointContract caption_contract,
                 EndpointContract enrich_contract, DatasetConfig config);

  // Ordinary caption x for one clip; the prompt forbids camera and lighting
  // terminology, and a stoplist hit triggers one re-prompt.
  std::string caption_clip(const std::vector<std::string>& frame_paths);

  // Enriched caption y weaving every present annotation field into x;
  // validated by normalized-substring coverage, one re-prompt.
  std::string enrich_caption(const std::string& ordinary_caption,
                             const ShotAnnotation& annotation);

  FineTuneManifest build_dataset(const std::filesystem::path& corpus_manifest,
                                 const std::filesystem::path& out);

 private:
  Gateway& gateway_;
  EndpointContract caption_contract_;
  EndpointContract enrich_contract_;
  DatasetConfig config_;
};

std::vector<CorpusClip> load_corpus_manifest(const std::filesystem::path& path);

// Re-checks every emitted record against the training-pair invariants.
// Returns violations; empty means the file is clean.
std::vector<std::string> validate_dataset_file(
    const std::filesystem::path& dataset_path,
    const std::vector<std::string>& stoplist);

std::string serialize_annotation(const ShotAnnotation& annotation);

void write_manifest(const FineTuneManifest& manifest,
                    const std::filesystem::path& path);
FineTuneManifest read_manifest(const std::filesystem::path& path);

}  // namespace storyreel

#endif  // STORYREEL_DATASET_HPP_
