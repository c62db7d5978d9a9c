#include "storyreel/storyboard.hpp"

#include <unistd.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "storyreel/errors.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char* to_string(ShotType t) {
  switch (t) {
    case ShotType::SceneStart: return "scene_start";
    case ShotType::SceneMid: return "scene_mid";
    case ShotType::SceneEnd: return "scene_end";
  }
  return "scene_mid";
}

ShotType shot_type_from_string(const std::string& s) {
  if (s == "scene_start") return ShotType::SceneStart;
  if (s == "scene_mid") return ShotType::SceneMid;
  if (s == "scene_end") return ShotType::SceneEnd;
  throw Error("unknown shot type: " + s);
}

const char* to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Running: return "running";
    case StageStatus::Done: return "done";
    case StageStatus::Failed: return "failed";
  }
  return "pending";
}

StageStatus stage_status_from_string(const std::string& s) {
  if (s == "pending") return StageStatus::Pending;
  if (s == "running") return StageStatus::Running;
  if (s == "done") return StageStatus::Done;
  if (s == "failed") return StageStatus::Failed;
  throw Error("unknown stage status: " + s);
}

bool CinematicAttributes::empty() const {
  return shot_size.empty() && camera_angle.empty() && camera_motion.empty() &&
         framing.empty() && lighting.empty();
}

const Scene* Storyboard::find_scene(int index) const {
  for (const auto& s : scenes)
    if (s.index == index) return &s;
  return nullptr;
}

std::vector<const ShotDescription*> Storyboard::shots_of_scene(int scene_index) const {
  std::vector<const ShotDescription*> out;
  for (const auto& s : shots)
    if (s.scene_index == scene_index) out.push_back(&s);
  return out;
}

const ReferenceAsset* Storyboard::find_reference(ReferenceKind kind,
                                                 const std::string& key) const {
  for (const auto& r : references)
    if (r.kind == kind && r.key == key) return &r;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<std::string> validate(const StoryOutline& outline) {
  std::vector<std::string> v;
  if (util::trim(outline.outline).empty())
    v.push_back("outline: empty after trimming");
  std::set<std::string> seen;
  for (const auto& [name, desc] : outline.character_profiles) {
    (void)desc;
    std::string norm = util::normalize_name(name);
    if (!seen.insert(norm).second)
      v.push_back("outline: duplicate character name '" + name + "'");
  }
  return v;
}

namespace {

std::set<std::string> script_name_set(const Script& script) {
  std::set<std::string> names;
  for (const auto& c : script.characters) names.insert(util::normalize_name(c.name));
  return names;
}

std::string shot_key(const ShotDescription& s) {
  return "shot (" + std::to_string(s.scene_index) + "," +
         std::to_string(s.shot_index) + ")";
}

}  // namespace

std::vector<std::string> validate(const Storyboard& board, const ValidateOptions& opts) {
  std::vector<std::string> v;
  const auto names = script_name_set(board.script);

  // Scene indices must be the contiguous sequence 1..k in order.
  for (size_t i = 0; i < board.scenes.size(); ++i) {
    if (board.scenes[i].index != static_cast<int>(i) + 1) {
      v.push_back("scenes: non-contiguous scene indices (position " +
                  std::to_string(i) + " has index " +
                  std::to_string(board.scenes[i].index) + ")");
      break;
    }
  }
  for (const auto& scene : board.scenes) {
    for (const auto& name : scene.characters) {
      if (!names.count(util::normalize_name(name)))
        v.push_back("scene " + std::to_string(scene.index) +
                    ": unknown character '" + name + "'");
    }
  }

  // Shots: grouped contiguously by scene in scene order, shot_index 1..N.
  {
    int prev_scene = 0;
    std::set<int> seen_scenes;
    int expected_shot = 1;
    for (const auto& shot : board.shots) {
      if (!board.find_scene(shot.scene_index)) {
        v.push_back(shot_key(shot) + ": scene_index does not exist");
        continue;
      }
      if (shot.scene_index != prev_scene) {
        if (seen_scenes.count(shot.scene_index))
          v.push_back(shot_key(shot) + ": scene group is not contiguous");
        if (shot.scene_index < prev_scene)
          v.push_back(shot_key(shot) + ": scene groups out of order");
        seen_scenes.insert(shot.scene_index);
        prev_scene = shot.scene_index;
        expected_shot = 1;
      }
      if (shot.shot_index != expected_shot)
        v.push_back(shot_key(shot) + ": expected shot_index " +
                    std::to_string(expected_shot));
      ++expected_shot;
      for (const auto& name : shot.characters) {
        if (!names.count(util::normalize_name(name)))
          v.push_back(shot_key(shot) + ": unknown character '" + name + "'");
      }
    }
  }

  // Shot type pattern per scene: SceneEnd | SceneStart SceneMid* SceneEnd.
  for (const auto& scene : board.scenes) {
    auto scene_shots = board.shots_of_scene(scene.index);
    const size_t n = scene_shots.size();
    if (n == 0) continue;
    if (n == 1) {
      if (scene_shots[0]->shot_type != ShotType::SceneEnd)
        v.push_back(shot_key(*scene_shots[0]) +
                    ": single-shot scene must be scene_end");
      continue;
    }
    int end_count = 0;
    for (size_t i = 0; i < n; ++i) {
      const auto& shot = *scene_shots[i];
      if (shot.shot_type == ShotType::SceneEnd) ++end_count;
      ShotType expected = i == 0 ? ShotType::SceneStart
                        : i == n - 1 ? ShotType::SceneEnd
                                     : ShotType::SceneMid;
      if (shot.shot_type != expected)
        v.push_back(shot_key(shot) + ": expected " + to_string(expected) +
                    ", got " + to_string(shot.shot_type));
    }
    if (end_count != 1)
      v.push_back("scene " + std::to_string(scene.index) + ": " +
                  std::to_string(end_count) + " scene_end shots, expected 1");
  }

  // References: unique (kind, key); paths exist when a base dir is given.
  {
    std::set<std::pair<int, std::string>> seen;
    for (const auto& r : board.references) {
      auto key = std::make_pair(static_cast<int>(r.kind), r.key);
      if (!seen.insert(key).second)
        v.push_back("reference (" +
                    std::string(r.kind == ReferenceKind::Character ? "character"
                                                                   : "scene") +
                    "," + r.key + "): duplicate (kind, key)");
      if (opts.base_dir && !fs::exists(*opts.base_dir / r.image_path))
        v.push_back("reference " + r.key + ": image_path missing: " + r.image_path);
    }
  }

  for (const auto& c : board.clips) {
    if (c.status == ClipStatus::Rendered) {
      if (c.frame_count <= 0)
        v.push_back("clip (" + std::to_string(c.scene_index) + "," +
                    std::to_string(c.shot_index) + "): rendered with frame_count <= 0");
      if (opts.base_dir && !fs::exists(*opts.base_dir / c.video_path))
        v.push_back("clip (" + std::to_string(c.scene_index) + "," +
                    std::to_string(c.shot_index) + "): video_path missing: " +
                    c.video_path);
    }
  }

  return v;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json to_json(const CinematicAttributes& c) {
  ordered_json j = ordered_json::object();
  if (!c.shot_size.empty()) j["shot_size"] = c.shot_size;
  if (!c.camera_angle.empty()) j["camera_angle"] = c.camera_angle;
  if (!c.camera_motion.empty()) j["camera_motion"] = c.camera_motion;
  if (!c.framing.empty()) j["framing"] = c.framing;
  if (!c.lighting.empty()) j["lighting"] = c.lighting;
  return j;
}

CinematicAttributes cinematic_from_json(const ordered_json& j) {
  CinematicAttributes c;
  c.shot_size = j.value("shot_size", "");
  c.camera_angle = j.value("camera_angle", "");
  c.camera_motion = j.value("camera_motion", "");
  c.framing = j.value("framing", "");
  c.lighting = j.value("lighting", "");
  return c;
}

}  // namespace

std::string serialize(const Storyboard& board) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;

  ordered_json script;
  script["genre"] = board.script.genre;
  script["logline"] = board.script.logline;
  script["characters"] = ordered_json::array();
  for (const auto& c : board.script.characters) {
    script["characters"].push_back({{"name", c.name},
                                    {"role", c.role},
                                    {"appearance", c.appearance},
                                    {"personality", c.personality}});
  }
  script["storyline"] = board.script.storyline;
  script["source_outline_digest"] = board.script.source_outline_digest;
  j["script"] = script;

  j["scenes"] = ordered_json::array();
  for (const auto& s : board.scenes) {
    ordered_json js;
    js["index"] = s.index;
    js["location"] = s.location;
    js["time_of_day"] = s.time_of_day;
    js["plot"] = s.plot;
    js["characters"] = s.characters;
    js["objective"] = s.objective;
    if (!s.extra.empty()) js["extra"] = s.extra;
    j["scenes"].push_back(js);
  }

  j["shots"] = ordered_json::array();
  for (const auto& s : board.shots) {
    ordered_json js;
    js["scene_index"] = s.scene_index;
    js["shot_index"] = s.shot_index;
    js["shot_type"] = to_string(s.shot_type);
    js["content"] = s.content;
    js["characters"] = s.characters;
    js["cinematic"] = to_json(s.cinematic);
    if (s.raw_content) js["raw_content"] = *s.raw_content;
    j["shots"].push_back(js);
  }

  j["references"] = ordered_json::array();
  for (const auto& r : board.references) {
    j["references"].push_back(
        {{"kind", r.kind == ReferenceKind::Character ? "character" : "scene"},
         {"key", r.key},
         {"image_path", r.image_path},
         {"prompt_used", r.prompt_used}});
  }

  j["clips"] = ordered_json::array();
  for (const auto& c : board.clips) {
    ordered_json jc;
    jc["scene_index"] = c.scene_index;
    jc["shot_index"] = c.shot_index;
    jc["video_path"] = c.video_path;
    jc["width"] = c.width;
    jc["height"] = c.height;
    jc["fps"] = c.fps;
    jc["frame_count"] = c.frame_count;
    jc["status"] = c.status == ClipStatus::Pending ? "pending"
                 : c.status == ClipStatus::Rendered ? "rendered"
                                                    : "failed";
    if (!c.reason.empty()) jc["reason"] = c.reason;
    j["clips"].push_back(jc);
  }

  ordered_json status = ordered_json::object();
  for (const auto& [stage, st] : board.stage_status) status[stage] = to_string(st);
  j["stage_status"] = status;

  return j.dump(2) + "\n";
}

Storyboard deserialize(const std::string& bytes) {
  ordered_json j;
  try {
    j = ordered_json::parse(bytes);
  } catch (const std::exception& e) {
    throw PersistenceError(std::string("malformed storyboard document: ") + e.what(),
                           "<memory>");
  }
  const std::string version = j.value("schema_version", "");
  if (version != kSchemaVersion)
    throw PersistenceError("unsupported schema_version '" + version + "'", "<memory>");

  Storyboard board;
  const auto& js = j.at("script");
  board.script.genre = js.value("genre", "");
  board.script.logline = js.value("logline", "");
  for (const auto& c : js.value("characters", ordered_json::array())) {
    board.script.characters.push_back({c.value("name", ""), c.value("role", ""),
                                       c.value("appearance", ""),
                                       c.value("personality", "")});
  }
  board.script.storyline = js.value("storyline", "");
  board.script.source_outline_digest = js.value("source_outline_digest", "");

  for (const auto& s : j.value("scenes", ordered_json::array())) {
    Scene scene;
    scene.index = s.value("index", 0);
    scene.location = s.value("location", "");
    scene.time_of_day = s.value("time_of_day", "");
    scene.plot = s.value("plot", "");
    scene.characters = s.value("characters", std::vector<std::string>{});
    scene.objective = s.value("objective", "");
    if (s.contains("extra"))
      scene.extra = s.at("extra").get<std::map<std::string, std::string>>();
    board.scenes.push_back(std::move(scene));
  }

  for (const auto& s : j.value("shots", ordered_json::array())) {
    ShotDescription shot;
    shot.scene_index = s.value("scene_index", 0);
    shot.shot_index = s.value("shot_index", 0);
    shot.shot_type = shot_type_from_string(s.value("shot_type", ""));
    shot.content = s.value("content", "");
    shot.characters = s.value("characters", std::vector<std::string>{});
    shot.cinematic = cinematic_from_json(s.value("cinematic", ordered_json::object()));
    if (s.contains("raw_content")) shot.raw_content = s.at("raw_content").get<std::string>();
    board.shots.push_back(std::move(shot));
  }

  for (const auto& r : j.value("references", ordered_json::array())) {
    ReferenceAsset asset;
    const std::string kind = r.value("kind", "");
    if (kind == "character") asset.kind = ReferenceKind::Character;
    else if (kind == "scene") asset.kind = ReferenceKind::Scene;
    else throw PersistenceError("unknown reference kind '" + kind + "'", "<memory>");
    asset.key = r.value("key", "");
    asset.image_path = r.value("image_path", "");
    asset.prompt_used = r.value("prompt_used", "");
    board.references.push_back(std::move(asset));
  }

  for (const auto& c : j.value("clips", ordered_json::array())) {
    ClipRecord clip;
    clip.scene_index = c.value("scene_index", 0);
    clip.shot_index = c.value("shot_index", 0);
    clip.video_path = c.value("video_path", "");
    clip.width = c.value("width", 0);
    clip.height = c.value("height", 0);
    clip.fps = c.value("fps", 0.0);
    clip.frame_count = c.value("frame_count", 0);
    const std::string st = c.value("status", "pending");
    clip.status = st == "rendered" ? ClipStatus::Rendered
                : st == "failed" ? ClipStatus::Failed
                                 : ClipStatus::Pending;
    clip.reason = c.value("reason", "");
    board.clips.push_back(std::move(clip));
  }

  const ordered_json status = j.value("stage_status", ordered_json::object());
  for (const auto& [stage, st] : status.items())
    board.stage_status[stage] = stage_status_from_string(st.get<std::string>());

  return board;
}

void save(const Storyboard& board, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "refs", ec);
  fs::create_directories(dir / "clips", ec);
  if (ec) throw PersistenceError("cannot create storyboard layout: " + ec.message(),
                                 dir.string());
  util::atomic_write(dir / "storyboard.json", serialize(board));
}

Storyboard load(const fs::path& dir) {
  const fs::path doc = dir / "storyboard.json";
  if (!fs::exists(doc))
    throw PersistenceError("storyboard document not found", doc.string());
  Storyboard board;
  try {
    board = deserialize(util::read_file(doc));
  } catch (const PersistenceError& e) {
    throw PersistenceError(e.what(), doc.string());
  }
  auto violations = validate(board);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "storyboard violates invariants:";
    for (const auto& v : violations) msg << "\n  - " << v;
    throw PersistenceError(msg.str(), doc.string());
  }
  return board;
}

StoreLock::StoreLock(const fs::path& dir) : lock_path_(dir / ".lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  // O_EXCL-style create via noreplace semantics: ofstream lacks it, so probe.
  if (fs::exists(lock_path_))
    throw PersistenceError("storyboard dir is locked by another writer",
                           lock_path_.string());
  util::atomic_write(lock_path_, std::to_string(::getpid()) + "\n");
}

StoreLock::~StoreLock() {
  std::error_code ec;
  fs::remove(lock_path_, ec);
}

}  // namespace storyreel
