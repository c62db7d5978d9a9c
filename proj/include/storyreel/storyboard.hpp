#ifndef STORYREEL_STORYBOARD_HPP_
#define STORYREEL_STORYBOARD_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace storyreel {

// ---------------------------------------------------------------------------
// Hierarchical storyboard model. A storyboard is script + scenes + shots plus
// the reference assets and clip records produced along the way; one JSON
// document per storyboard is the single persisted source of truth.
// ---------------------------------------------------------------------------

struct CharacterProfile {
  std::string name;
  std::string role;
  std::string appearance;
  std::string personality;
  bool operator==(const CharacterProfile&) const = default;
};

struct StoryOutline {
  std::string title;
  std::string outline;  // non-empty after trimming
  std::vector<std::pair<std::string, std::string>> character_profiles;
  std::map<std::string, std::string> reference_images;  // character name -> path
  bool operator==(const StoryOutline&) const = default;
};

struct Script {
  std::string genre;
  std::string logline;
  std::vector<CharacterProfile> characters;
  std::string storyline;
  std::string source_outline_digest;
  bool operator==(const Script&) const = default;
};

struct Scene {
  int index = 0;  // 1-based, contiguous across a storyboard
  std::string location;
  std::string time_of_day;
  std::string plot;
  std::vector<std::string> characters;
  std::string objective;
  // Model-supplied properties outside the fixed schema.
  std::map<std::string, std::string> extra;
  bool operator==(const Scene&) const = default;
};

enum class ShotType { SceneStart, SceneMid, SceneEnd };

const char* to_string(ShotType t);
ShotType shot_type_from_string(const std::string& s);

struct CinematicAttributes {
  std::string shot_size;
  std::string camera_angle;
  std::string camera_motion;
  std::string framing;
  std::string lighting;
  bool empty() const;
  bool operator==(const CinematicAttributes&) const = default;
};

struct ShotDescription {
  int scene_index = 0;
  int shot_index = 0;  // 1-based within the scene
  ShotType shot_type = ShotType::SceneMid;
  std::string content;
  std::vector<std::string> characters;
  CinematicAttributes cinematic;
  std::optional<std::string> raw_content;  // pre-injection description
  bool operator==(const ShotDescription&) const = default;
};

enum class ReferenceKind { Character, Scene };

struct ReferenceAsset {
  ReferenceKind kind = ReferenceKind::Character;
  std::string key;         // character name or scene index as text
  std::string image_path;  // relative to the storyboard dir
  std::string prompt_used;
  bool operator==(const ReferenceAsset&) const = default;
};

enum class ClipStatus { Pending, Rendered, Failed };

struct ClipRecord {
  int scene_index = 0;
  int shot_index = 0;
  std::string video_path;
  int width = 0;
  int height = 0;
  double fps = 0.0;
  int frame_count = 0;
  ClipStatus status = ClipStatus::Pending;
  std::string reason;  // populated when status == Failed
  bool operator==(const ClipRecord&) const = default;
};

enum class StageStatus { Pending, Running, Done, Failed };

const char* to_string(StageStatus s);
StageStatus stage_status_from_string(const std::string& s);

struct Storyboard {
  Script script;
  std::vector<Scene> scenes;
  std::vector<ShotDescription> shots;  // scene-major, shot-minor
  std::vector<ReferenceAsset> references;
  std::vector<ClipRecord> clips;
  std::map<std::string, StageStatus> stage_status;

  const Scene* find_scene(int index) const;
  std::vector<const ShotDescription*> shots_of_scene(int scene_index) const;
  const ReferenceAsset* find_reference(ReferenceKind kind, const std::string& key) const;

  bool operator==(const Storyboard&) const = default;
};

// ---------------------------------------------------------------------------
// Validation. Violations are data, not errors; each names the entity and rule.
// ---------------------------------------------------------------------------

struct ValidateOptions {
  // When set, reference/clip paths are checked for existence relative to it.
  std::optional<std::filesystem::path> base_dir;
};

std::vector<std::string> validate(const StoryOutline& outline);
std::vector<std::string> validate(const Storyboard& board,
                                  const ValidateOptions& opts = {});

// ---------------------------------------------------------------------------
// Persistence. Layout: <dir>/storyboard.json, <dir>/refs/, <dir>/clips/.
// save() is atomic; load() rejects invariant violations instead of repairing.
// ---------------------------------------------------------------------------

inline constexpr const char* kSchemaVersion = "1";

void save(const Storyboard& board, const std::filesystem::path& dir);
Storyboard load(const std::filesystem::path& dir);

std::string serialize(const Storyboard& board);
Storyboard deserialize(const std::string& bytes);

// Advisory single-writer lock on a storyboard directory.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& dir);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace storyreel

#endif  // STORYREEL_STORYBOARD_HPP_
