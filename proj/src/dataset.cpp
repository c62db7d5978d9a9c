#include "storyreel/dataset.hpp"

#include <fstream>
#include <sstream>

#include "storyreel/errors.hpp"
#include "storyreel/prompt_template.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::pair<std::string, std::string>> ShotAnnotation::present_fields()
    const {
  std::vector<std::pair<std::string, std::string>> out;
  if (!shot_size.empty()) out.emplace_back("shot_size", shot_size);
  if (!camera_angle.empty()) out.emplace_back("camera_angle", camera_angle);
  if (!framing.empty()) out.emplace_back("framing", framing);
  if (!camera_motion.empty()) out.emplace_back("camera_motion", camera_motion);
  if (!lighting.empty()) out.emplace_back("lighting", lighting);
  return out;
}

bool hits_stoplist(const std::string& text,
                   const std::vector<std::string>& stoplist) {
  for (const auto& token : stoplist)
    if (util::contains_word(text, token)) return true;
  return false;
}

std::string serialize_annotation(const ShotAnnotation& annotation) {
  std::string out;
  for (const auto& [field, value] : annotation.present_fields()) {
    if (!out.empty()) out += ", ";
    out += field + "=" + value;
  }
  return out;
}

DatasetBuilder::DatasetBuilder(Gateway& gateway, EndpointContract caption_contract,
                               EndpointContract enrich_contract,
                               DatasetConfig config)
    : gateway_(gateway),
      caption_contract_(std::move(caption_contract)),
      enrich_contract_(std::move(enrich_contract)),
      config_(std::move(config)) {}

std::string DatasetBuilder::caption_clip(
    const std::vector<std::string>& frame_paths) {
  if (frame_paths.empty())
    throw Error("caption_clip: at least one frame is required");
  auto tmpl =
      PromptTemplate::load(config_.template_dir / "dataset" / "caption.json");
  std::string frames;
  for (const auto& f : frame_paths) frames += f + "\n";
  const std::string prompt = tmpl.render({{"frame_count",
                                           std::to_string(frame_paths.size())}});

  ChatTurn turn{ChatTurn::Speaker::User, prompt, frame_paths};
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = util::trim(gateway_.chat(caption_contract_, {turn}));
    if (!hits_stoplist(reply, config_.stoplist)) return reply;
    turn.content = prompt +
                   "\nYour previous description used cinematic vocabulary. "
                   "Describe only the objects and actions; avoid all camera "
                   "and lighting terms.";
  }
  throw RecordError("caption rejected twice by the cinematic-vocabulary stoplist");
}

std::string DatasetBuilder::enrich_caption(const std::string& ordinary_caption,
                                           const ShotAnnotation& annotation) {
  const auto fields = annotation.present_fields();
  if (fields.empty())
    throw Error("enrich_caption: annotation has no populated fields");
  auto tmpl =
      PromptTemplate::load(config_.template_dir / "dataset" / "enrich.json");
  const std::string prompt = tmpl.render({
      {"caption", ordinary_caption},
      {"annotation", serialize_annotation(annotation)},
  });

  auto covered = [&](const std::string& y) {
    const std::string norm = util::normalize_text(y);
    for (const auto& [field, value] : fields) {
      (void)field;
      if (norm.find(util::normalize_text(value)) == std::string::npos)
        return false;
    }
    return true;
  };

  ChatTurn turn{ChatTurn::Speaker::User, prompt, {}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = util::trim(gateway_.chat(enrich_contract_, {turn}));
    if (covered(reply)) return reply;
    turn.content = prompt +
                   "\nYour previous rewrite dropped part of the annotation. "
                   "Every annotated attribute value must appear in the result.";
  }
  throw RecordError("enriched caption failed annotation coverage twice");
}

std::vector<CorpusClip> load_corpus_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const std::exception& e) {
    throw PersistenceError(std::string("unreadable corpus manifest: ") + e.what(),
                           path.string());
  }
  std::vector<CorpusClip> clips;
  for (const auto& c : j.value("clips", json::array())) {
    CorpusClip clip;
    clip.clip_id = c.value("clip_id", "");
    clip.frame_paths = c.value("frames", std::vector<std::string>{});
    const json a = c.value("annotation", json::object());
    clip.annotation.clip_id = clip.clip_id;
    clip.annotation.shot_size = a.value("shot_size", "");
    clip.annotation.camera_angle = a.value("camera_angle", "");
    clip.annotation.framing = a.value("framing", "");
    clip.annotation.camera_motion = a.value("camera_motion", "");
    clip.annotation.lighting = a.value("lighting", "");
    clips.push_back(std::move(clip));
  }
  return clips;
}

namespace {

// Fixed directive prefixed to every instruction so an external next-token
// trainer sees both the caption and the annotation in its input.
constexpr const char* kRewriteDirective =
    "Rewrite the following plain video description into a professional "
    "cinematic shot description that honors every listed attribute.";

}  // namespace

FineTuneManifest DatasetBuilder::build_dataset(const fs::path& corpus_manifest,
                                               const fs::path& out) {
  const auto clips = load_corpus_manifest(corpus_manifest);

  std::ostringstream dataset;
  FineTuneManifest manifest;
  for (const auto& clip : clips) {
    try {
      TrainingPair pair;
      pair.clip_id = clip.clip_id;
      pair.annotation = clip.annotation;
      if (clip.annotation.empty())
        throw RecordError("clip " + clip.clip_id + ": annotation has no fields");
      pair.ordinary_caption = caption_clip(clip.frame_paths);
      pair.cinematic_caption =
          enrich_caption(pair.ordinary_caption, pair.annotation);

      json record;
      record["clip_id"] = pair.clip_id;
      record["instruction"] = std::string(kRewriteDirective) +
                              "\nDescription: " + pair.ordinary_caption +
                              "\nAttributes: " + serialize_annotation(pair.annotation);
      record["response"] = pair.cinematic_caption;
      record["ordinary_caption"] = pair.ordinary_caption;
      json ann = json::object();
      for (const auto& [field, value] : pair.annotation.present_fields())
        ann[field] = value;
      record["annotation"] = ann;
      dataset << record.dump() << "\n";
      ++manifest.pair_count;
    } catch (const RecordError&) {
      ++manifest.skip_count;  // skipped, tallied, not fatal
    }
  }

  util::atomic_write(out, dataset.str());
  manifest.objective_note =
      "External trainer minimizes the summed negative log-likelihood of each "
      "response given its instruction (next-token cross-entropy on the "
      "response span only).";
  manifest.hyperparameters = {{"adapter_rank", "8"},
                              {"adapter_scale", "32"},
                              {"learning_rate", "1e-4"},
                              {"epochs", "20"},
                              {"target_layers", "all linear layers"}};
  manifest.dataset_path = out.string();
  manifest.dataset_digest = util::sha256_file_hex(out);
  return manifest;
}

std::vector<std::string> validate_dataset_file(
    const fs::path& dataset_path, const std::vector<std::string>& stoplist) {
  std::vector<std::string> violations;
  std::ifstream in(dataset_path);
  if (!in) {
    violations.push_back("dataset file unreadable: " + dataset_path.string());
    return violations;
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const std::exception&) {
      violations.push_back("line " + std::to_string(line_no) + ": not valid JSON");
      continue;
    }
    const std::string id = record.value("clip_id", "<unknown>");
    const std::string x = record.value("ordinary_caption", "");
    const std::string y = record.value("response", "");
    if (hits_stoplist(x, stoplist))
      violations.push_back(id + ": ordinary caption contains a stoplist token");
    const json ann = record.value("annotation", json::object());
    if (ann.empty()) {
      violations.push_back(id + ": record has no annotation fields");
      continue;
    }
    bool any = false;
    const std::string norm_y = util::normalize_text(y);
    for (const auto& [field, value] : ann.items()) {
      (void)field;
      if (norm_y.find(util::normalize_text(value.get<std::string>())) !=
          std::string::npos) {
        any = true;
        break;
      }
    }
    if (!any)
      violations.push_back(id + ": cinematic caption covers no annotation value");
  }
  return violations;
}

void write_manifest(const FineTuneManifest& manifest, const fs::path& path) {
  nlohmann::ordered_json j;
  j["pair_count"] = manifest.pair_count;
  j["skip_count"] = manifest.skip_count;
  j["objective_note"] = manifest.objective_note;
  j["hyperparameters"] = manifest.hyperparameters;
  j["dataset_path"] = manifest.dataset_path;
  j["dataset_digest"] = manifest.dataset_digest;
  util::atomic_write(path, j.dump(2) + "\n");
}

FineTuneManifest read_manifest(const fs::path& path) {
  json j = json::parse(util::read_file(path));
  FineTuneManifest m;
  m.pair_count = j.value("pair_count", 0);
  m.skip_count = j.value("skip_count", 0);
  m.objective_note = j.value("objective_note", "");
  if (j.contains("hyperparameters"))
    m.hyperparameters =
        j.at("hyperparameters").get<std::map<std::string, std::string>>();
  m.dataset_path = j.value("dataset_path", "");
  m.dataset_digest = j.value("dataset_digest", "");
  return m;
}

}  // namespace storyreel
