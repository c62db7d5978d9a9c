#ifndef STORYREEL_PIPELINE_HPP_
#define STORYREEL_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "storyreel/cinematography.hpp"
#include "storyreel/director.hpp"
#include "storyreel/gateway.hpp"
#include "storyreel/storyboard.hpp"
#include "storyreel/video.hpp"

namespace storyreel {

// End-to-end orchestration of the two pipeline stages with checkpointing and
// resume. Stage order is fixed; a stage runs only when all predecessors are
// done, and the storyboard is re-saved after every transition.

inline const std::vector<std::string> kStages = {
    "script", "scenes", "references", "shots", "injection", "render", "concat"};

struct RenderStageConfig {
  int parallelism = 2;
  bool halt_on_failure = true;
  int width = 832;
  int height = 480;
  double fps = 15.0;
  std::string clip_ext = "mp4";
  std::string probe_command;            // {path} placeholder
  std::optional<std::string> muxer_command;  // {manifest} and {output}
};

struct PipelineConfig {
  std::filesystem::path story_path;
  std::filesystem::path workdir;
  std::filesystem::path template_dir = "templates";
  std::map<std::string, EndpointContract> endpoints;  // chat, t2i, i2v, judge,
                                                      // injection
  RecursionConfig recursion;
  ReferenceMode reference_mode = ReferenceMode::Generate;
  RenderStageConfig render;
  int max_scenes = 10;
  unsigned seed = 0;

  // Paths in the file are resolved relative to its directory.
  static PipelineConfig load(const std::filesystem::path& file);
};

struct RunOptions {
  bool no_rsg = false;  // independent per-shot generation, no prior-shot context
  bool no_cli = false;  // skip cinematic injection entirely
  std::optional<std::string> stop_after;  // test hook: halt after this stage
};

struct RunResult {
  Storyboard storyboard;
  std::optional<ConcatManifest> manifest;
  std::vector<std::string> warnings;
};

StoryOutline load_outline(const std::filesystem::path& path);

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  Gateway& gateway() { return gateway_; }
  void set_probe(ClipProbe probe) { probe_ = std::move(probe); }

  // Fresh run; the workdir must not already hold a storyboard.
  RunResult run(const RunOptions& opts = {});

  // Continues from the first non-done stage without re-issuing completed
  // stages' model calls.
  RunResult resume(const RunOptions& opts = {});

 private:
  RunResult execute(Storyboard board, const RunOptions& opts);
  void require_contract(const std::string& role_key, Role role,
                        const RunOptions& opts) const;
  const EndpointContract& contract(const std::string& key) const;
  void checkpoint(const std::string& stage, StageStatus status,
                  const std::string& input_digest);

  PipelineConfig config_;
  Gateway gateway_;
  ClipProbe probe_;
};

// Human-readable status summary for a workdir.
std::string inspect(const std::filesystem::path& workdir);

}  // namespace storyreel

#endif  // STORYREEL_PIPELINE_HPP_
