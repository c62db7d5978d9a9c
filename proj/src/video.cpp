#include "storyreel/video.hpp"

#include <algorithm>
#include <sstream>

#include "storyreel/errors.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

ClipProbe make_command_probe(const std::string& command_template) {
  return [command_template](const fs::path& path, ClipRecord& record) {
    std::string cmd = command_template;
    const std::string placeholder = "{path}";
    if (auto pos = cmd.find(placeholder); pos != std::string::npos)
      cmd.replace(pos, placeholder.size(), path.string());
    auto result = util::run_command(cmd);
    if (result.exit_code != 0)
      throw Error("probe command failed (" + std::to_string(result.exit_code) +
                  "): " + result.output);
    json j;
    try {
      j = extract_structured(result.output);
    } catch (const ParseError&) {
      throw Error("probe command emitted no parsable metadata: " + result.output);
    }
    record.width = j.value("width", 0);
    record.height = j.value("height", 0);
    record.fps = j.value("fps", 0.0);
    record.frame_count = j.value("frame_count", 0);
  };
}

std::vector<fs::path> select_references(const ShotDescription& shot,
                                        const Storyboard& board,
                                        const fs::path& base_dir,
                                        std::vector<Notice>* notices) {
  std::vector<std::pair<std::string, const ReferenceAsset*>> character_assets;
  for (const auto& name : shot.characters) {
    const ReferenceAsset* asset = nullptr;
    for (const auto& r : board.references) {
      if (r.kind == ReferenceKind::Character &&
          util::normalize_name(r.key) == util::normalize_name(name)) {
        asset = &r;
        break;
      }
    }
    if (asset) {
      character_assets.emplace_back(util::normalize_name(name), asset);
    } else if (notices && !board.references.empty()) {
      notices->push_back({"no reference asset for character '" + name +
                          "' in shot (" + std::to_string(shot.scene_index) + "," +
                          std::to_string(shot.shot_index) + ")"});
    }
  }
  std::sort(character_assets.begin(), character_assets.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<fs::path> paths;
  for (const auto& [name, asset] : character_assets) {
    (void)name;
    paths.push_back(base_dir / asset->image_path);
  }
  if (const ReferenceAsset* scene_asset = board.find_reference(
          ReferenceKind::Scene, std::to_string(shot.scene_index))) {
    paths.push_back(base_dir / scene_asset->image_path);
  }
  return paths;
}

ClipRecord render_shot(Gateway& gateway, const RenderPlan& plan,
                       const EndpointContract& contract, const fs::path& out_dir,
                       const ClipProbe& probe, const std::string& ext) {
  for (const auto& p : plan.reference_paths) {
    if (!fs::exists(p))
      throw Error("render plan references a missing file: " + p.string());
  }
  fs::create_directories(out_dir / "clips");
  const fs::path out = out_dir / "clips" /
                       ("s" + std::to_string(plan.scene_index) + "_" +
                        std::to_string(plan.shot_index) + "." + ext);
  ClipRecord record;
  record.scene_index = plan.scene_index;
  record.shot_index = plan.shot_index;
  try {
    ClipRecord rendered = gateway.generate_video(contract, plan.prompt,
                                                 plan.reference_paths, out, probe);
    record.video_path = fs::relative(out, out_dir).string();
    record.width = rendered.width;
    record.height = rendered.height;
    record.fps = rendered.fps;
    record.frame_count = rendered.frame_count;
    record.status = ClipStatus::Rendered;
  } catch (const TransportError& e) {
    record.status = ClipStatus::Failed;
    record.reason = e.what();
  } catch (const MockError& e) {
    record.status = ClipStatus::Failed;
    record.reason = e.what();
  }
  return record;
}

std::vector<std::string> validate_clip(const ClipRecord& record,
                                       const ExpectedClipFormat& expected) {
  std::vector<std::string> violations;
  if (record.width != expected.width)
    violations.push_back("width mismatch: got " + std::to_string(record.width) +
                         ", expected " + std::to_string(expected.width));
  if (record.height != expected.height)
    violations.push_back("height mismatch: got " + std::to_string(record.height) +
                         ", expected " + std::to_string(expected.height));
  if (record.fps != expected.fps) {
    std::ostringstream msg;
    msg << "fps mismatch: got " << record.fps << ", expected " << expected.fps;
    violations.push_back(msg.str());
  }
  return violations;
}

ConcatManifest build_concat(std::vector<ClipRecord> records,
                            const ConcatOptions& opts) {
  if (records.empty()) throw Error("build_concat: no clips");
  std::stable_sort(records.begin(), records.end(),
                   [](const ClipRecord& a, const ClipRecord& b) {
                     return std::tie(a.scene_index, a.shot_index) <
                            std::tie(b.scene_index, b.shot_index);
                   });
  std::vector<std::string> offenders;
  for (const auto& r : records) {
    if (r.status != ClipStatus::Rendered)
      offenders.push_back("clip (" + std::to_string(r.scene_index) + "," +
                          std::to_string(r.shot_index) + ") is not rendered");
  }
  const ExpectedClipFormat fmt{records.front().width, records.front().height,
                               records.front().fps};
  for (const auto& r : records) {
    for (const auto& v : validate_clip(r, fmt))
      offenders.push_back("clip (" + std::to_string(r.scene_index) + "," +
                          std::to_string(r.shot_index) + "): " + v);
  }
  if (!offenders.empty()) {
    std::string msg = "heterogeneous or unrendered clips:";
    for (const auto& o : offenders) msg += "\n  - " + o;
    throw Error(msg);
  }

  ConcatManifest manifest;
  manifest.width = fmt.width;
  manifest.height = fmt.height;
  manifest.fps = fmt.fps;
  for (const auto& r : records) {
    manifest.clip_paths.push_back(r.video_path);
    manifest.total_frames += r.frame_count;
  }

  if (opts.manifest_path) {
    std::string lines;
    for (const auto& p : manifest.clip_paths) lines += "file '" + p + "'\n";
    util::atomic_write(*opts.manifest_path, lines);
  }
  if (opts.muxer_command) {
    if (!opts.manifest_path || !opts.output_path)
      throw ConfigError("muxer command requires manifest_path and output_path");
    std::string cmd = *opts.muxer_command;
    auto replace = [&cmd](const std::string& key, const std::string& value) {
      if (auto pos = cmd.find(key); pos != std::string::npos)
        cmd.replace(pos, key.size(), value);
    };
    replace("{manifest}", opts.manifest_path->string());
    replace("{output}", opts.output_path->string());
    auto result = util::run_command(cmd);
    if (result.exit_code != 0)
      throw MuxError("muxer exited with " + std::to_string(result.exit_code) +
                     ": " + result.output);
    if (!fs::exists(*opts.output_path))
      throw MuxError("muxer reported success but produced no output file: " +
                     opts.output_path->string());
  }
  return manifest;
}

}  // namespace storyreel
