#ifndef STORYREEL_VIDEO_HPP_
#define STORYREEL_VIDEO_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "storyreel/gateway.hpp"
#include "storyreel/storyboard.hpp"

namespace storyreel {

// Shot-generation stage: per-shot reference resolution, I2V dispatch, clip
// metadata validation and the concatenation manifest for the final film.

struct RenderPlan {
  int scene_index = 0;
  int shot_index = 0;
  std::string prompt;  // final injected shot content
  // Characters first in name order, then the scene asset. May be empty in
  // reference-free mode.
  std::vector<std::filesystem::path> reference_paths;
};

struct ConcatManifest {
  std::vector<std::string> clip_paths;  // scene-major, shot-minor
  int width = 0;
  int height = 0;
  double fps = 0.0;
  int total_frames = 0;
};

// Probes clip metadata. The default implementation shells out to a command
// template with a {path} placeholder and parses JSON
// {width,height,fps,frame_count}; tests substitute a pure fake.
using ClipProbe = std::function<void(const std::filesystem::path&, ClipRecord&)>;

ClipProbe make_command_probe(const std::string& command_template);

struct Notice {
  std::string message;
};

// Character assets for the shot's characters (alphabetical by normalized
// name), then the scene asset if present. Missing assets are logged notices,
// not errors.
std::vector<std::filesystem::path> select_references(
    const ShotDescription& shot, const Storyboard& board,
    const std::filesystem::path& base_dir, std::vector<Notice>* notices = nullptr);

// Renders one shot to <out_dir>/clips/s<j>_<i>.<ext>. Endpoint failure after
// retries yields a failed record carrying the reason; the caller's policy
// decides halt-vs-continue.
ClipRecord render_shot(Gateway& gateway, const RenderPlan& plan,
                       const EndpointContract& contract,
                       const std::filesystem::path& out_dir,
                       const ClipProbe& probe, const std::string& ext = "mp4");

struct ExpectedClipFormat {
  int width = 832;
  int height = 480;
  double fps = 15.0;
};

// Empty iff dimensions and fps match exactly.
std::vector<std::string> validate_clip(const ClipRecord& record,
                                       const ExpectedClipFormat& expected);

struct ConcatOptions {
  std::optional<std::filesystem::path> manifest_path;  // plain ordered list file
  // Muxer command template with {manifest} and {output} placeholders.
  std::optional<std::string> muxer_command;
  std::optional<std::filesystem::path> output_path;
};

ConcatManifest build_concat(std::vector<ClipRecord> records,
                            const ConcatOptions& opts = {});

}  // namespace storyreel

#endif  // STORYREEL_VIDEO_HPP_
