#include "storyreel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "storyreel/errors.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

StoryOutline load_outline(const fs::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError("unreadable story file " + path.string() + ": " + e.what());
  }
  StoryOutline outline;
  outline.title = j.value("title", "");
  outline.outline = j.value("outline", "");
  for (const auto& c : j.value("characters", json::array()))
    outline.character_profiles.emplace_back(c.value("name", ""),
                                            c.value("description", ""));
  if (j.contains("reference_images"))
    outline.reference_images =
        j.at("reference_images").get<std::map<std::string, std::string>>();
  auto violations = validate(outline);
  if (!violations.empty())
    throw ConfigError("invalid story outline: " + violations.front());
  return outline;
}

namespace {

EndpointContract contract_from_json(const json& j, const fs::path& base) {
  EndpointContract c;
  c.role = role_from_string(j.value("role", "chat"));
  c.base_url = j.value("base_url", "");
  c.model_name = j.value("model_name", "");
  c.timeout_s = j.value("timeout_s", 120.0);
  c.max_retries = j.value("max_retries", 2);
  c.backoff_base_s = j.value("backoff_base_s", 0.5);
  c.poll_interval_s = j.value("poll_interval_s", 2.0);
  c.api_key_env = j.value("api_key_env", "");
  if (j.contains("mock_script")) {
    fs::path p = j.at("mock_script").get<std::string>();
    c.mock_script = p.is_absolute() ? p : base / p;
  }
  return c;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& file) {
  json j;
  try {
    j = json::parse(util::read_file(file));
  } catch (const std::exception& e) {
    throw ConfigError("unreadable config " + file.string() + ": " + e.what());
  }
  const fs::path base = file.has_parent_path() ? file.parent_path() : ".";
  PipelineConfig cfg;
  if (!j.contains("story")) throw ConfigError("config: missing 'story'");
  if (!j.contains("workdir")) throw ConfigError("config: missing 'workdir'");
  cfg.story_path = resolve(base, j.at("story").get<std::string>());
  cfg.workdir = resolve(base, j.at("workdir").get<std::string>());
  cfg.template_dir = resolve(base, j.value("template_dir", "templates"));
  const json endpoints = j.value("endpoints", json::object());
  for (const auto& [key, value] : endpoints.items())
    cfg.endpoints[key] = contract_from_json(value, base);
  const json r = j.value("recursion", json::object());
  cfg.recursion.max_shots_per_scene = r.value("max_shots_per_scene", 12);
  cfg.recursion.reprompt_on_parse_failure =
      r.value("reprompt_on_parse_failure", true);
  cfg.reference_mode =
      reference_mode_from_string(j.value("reference_mode", "generate"));
  const json rd = j.value("render", json::object());
  cfg.render.parallelism = rd.value("parallelism", 2);
  cfg.render.halt_on_failure = rd.value("halt_on_failure", true);
  cfg.render.width = rd.value("width", 832);
  cfg.render.height = rd.value("height", 480);
  cfg.render.fps = rd.value("fps", 15.0);
  cfg.render.clip_ext = rd.value("clip_ext", "mp4");
  cfg.render.probe_command = rd.value("probe_command", "");
  if (rd.contains("muxer_command") && rd.at("muxer_command").is_string())
    cfg.render.muxer_command = rd.at("muxer_command").get<std::string>();
  cfg.max_scenes = j.value("max_scenes", 10);
  cfg.seed = j.value("seed", 0u);

  if (!fs::exists(cfg.story_path))
    throw ConfigError("config: story file not found: " + cfg.story_path.string());
  if (!fs::exists(cfg.template_dir))
    throw ConfigError("config: template dir not found: " +
                      cfg.template_dir.string());
  return cfg;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  if (!config_.render.probe_command.empty())
    probe_ = make_command_probe(config_.render.probe_command);
}

const EndpointContract& Pipeline::contract(const std::string& key) const {
  auto it = config_.endpoints.find(key);
  if (it == config_.endpoints.end())
    throw ConfigError("config: missing endpoint contract '" + key + "'");
  return it->second;
}

void Pipeline::require_contract(const std::string& role_key, Role role,
                                const RunOptions&) const {
  auto it = config_.endpoints.find(role_key);
  if (it == config_.endpoints.end())
    throw ConfigError("config: missing endpoint contract '" + role_key + "'");
  if (it->second.role != role)
    throw ConfigError("config: endpoint '" + role_key + "' must have role " +
                      to_string(role));
}

void Pipeline::checkpoint(const std::string& stage, StageStatus status,
                          const std::string& input_digest) {
  const fs::path path = config_.workdir / "checkpoints.json";
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  if (fs::exists(path)) {
    try {
      log = nlohmann::ordered_json::parse(util::read_file(path));
    } catch (const std::exception&) {
      log = nlohmann::ordered_json::array();
    }
  }
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::ordered_json entry;
  entry["stage"] = stage;
  entry["status"] = to_string(status);
  entry["timestamp_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  entry["input_digest"] = input_digest;
  log.push_back(entry);
  util::atomic_write(path, log.dump(2) + "\n");
}

RunResult Pipeline::run(const RunOptions& opts) {
  if (fs::exists(config_.workdir / "storyboard.json"))
    throw ConfigError("workdir already holds a storyboard; use resume: " +
                      config_.workdir.string());
  Storyboard board;
  for (const auto& stage : kStages) board.stage_status[stage] = StageStatus::Pending;
  return execute(std::move(board), opts);
}

RunResult Pipeline::resume(const RunOptions& opts) {
  Storyboard board;
  try {
    board = load(config_.workdir);
  } catch (const PersistenceError& e) {
    throw ResumeError(std::string("cannot resume; start a fresh run: ") +
                      e.what());
  }
  for (const auto& stage : kStages)
    if (!board.stage_status.count(stage))
      board.stage_status[stage] = StageStatus::Pending;
  return execute(std::move(board), opts);
}

RunResult Pipeline::execute(Storyboard board, const RunOptions& opts) {
  // Validate the contract set up front, before any model call.
  require_contract("chat", Role::Chat, opts);
  if (config_.reference_mode == ReferenceMode::Generate &&
      board.stage_status["references"] != StageStatus::Done)
    require_contract("t2i", Role::T2I, opts);
  if (board.stage_status["render"] != StageStatus::Done)
    require_contract("i2v", Role::I2V, opts);
  if (!opts.no_cli && board.stage_status["injection"] != StageStatus::Done)
    require_contract("injection", Role::Chat, opts);

  StoreLock lock(config_.workdir);
  const StoryOutline outline = load_outline(config_.story_path);
  const std::string outline_digest = util::sha256_hex(outline.outline);

  RunResult result;

  DirectorConfig director_cfg{config_.template_dir, config_.max_scenes};
  DirectorAgent director(gateway_, contract("chat"), director_cfg);
  CinematographyAgent shots_agent(gateway_, contract("chat"),
                                  config_.template_dir);

  auto begin_stage = [&](const std::string& stage) {
    gateway_.set_stage(stage);
    board.stage_status[stage] = StageStatus::Running;
    save(board, config_.workdir);
    checkpoint(stage, StageStatus::Running, outline_digest);
  };
  auto finish_stage = [&](const std::string& stage) {
    board.stage_status[stage] = StageStatus::Done;
    save(board, config_.workdir);
    checkpoint(stage, StageStatus::Done, outline_digest);
  };

  std::optional<ConcatManifest> manifest;
  try {
    for (const auto& stage : kStages) {
      if (board.stage_status[stage] == StageStatus::Done) continue;
      begin_stage(stage);

      if (stage == "script") {
        board.script = director.expand_script(outline);
      } else if (stage == "scenes") {
        board.scenes = director.decompose_scenes(board.script);
      } else if (stage == "references") {
        board.references = director.build_references(
            board.script, board.scenes, config_.reference_mode, outline,
            config_.endpoints.count("t2i") ? contract("t2i") : EndpointContract{},
            config_.workdir / "refs");
        // Persist paths relative to the workdir so the dir can relocate.
        for (auto& r : board.references) {
          std::error_code ec;
          fs::path rel = fs::proximate(fs::absolute(r.image_path),
                                       fs::absolute(config_.workdir), ec);
          if (!ec) r.image_path = rel.string();
        }
      } else if (stage == "shots") {
        RecursionConfig rc = config_.recursion;
        rc.condition_on_previous = !opts.no_rsg;
        board.shots.clear();
        for (const auto& scene : board.scenes) {
          auto scene_shots = shots_agent.plan_shots(scene, board.script, rc);
          for (auto& s : scene_shots) board.shots.push_back(std::move(s));
        }
      } else if (stage == "injection") {
        if (!opts.no_cli) {
          std::vector<ShotDescription> injected;
          injected.reserve(board.shots.size());
          for (const auto& shot : board.shots)
            injected.push_back(
                shots_agent.inject_cinematic(shot, contract("injection")));
          board.shots = std::move(injected);
        }
      } else if (stage == "render") {
        std::vector<RenderPlan> plans;
        std::vector<Notice> notices;
        for (const auto& shot : board.shots) {
          RenderPlan plan;
          plan.scene_index = shot.scene_index;
          plan.shot_index = shot.shot_index;
          plan.prompt = shot.content;
          plan.reference_paths =
              select_references(shot, board, config_.workdir, &notices);
          plans.push_back(std::move(plan));
        }
        for (const auto& n : notices) result.warnings.push_back(n.message);

        std::vector<ClipRecord> records(plans.size());
        const int workers = std::max(1, config_.render.parallelism);
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex err_mu;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (;;) {
              size_t i = next.fetch_add(1);
              if (i >= plans.size()) return;
              try {
                records[i] = render_shot(gateway_, plans[i], contract("i2v"),
                                         config_.workdir, probe_,
                                         config_.render.clip_ext);
              } catch (...) {
                std::lock_guard<std::mutex> g(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
              }
            }
          });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);

        board.clips = std::move(records);
        std::sort(board.clips.begin(), board.clips.end(),
                  [](const ClipRecord& a, const ClipRecord& b) {
                    return std::tie(a.scene_index, a.shot_index) <
                           std::tie(b.scene_index, b.shot_index);
                  });
        if (config_.render.halt_on_failure) {
          for (const auto& c : board.clips) {
            if (c.status == ClipStatus::Failed)
              throw StageError("render failed for clip (" +
                               std::to_string(c.scene_index) + "," +
                               std::to_string(c.shot_index) + "): " + c.reason);
          }
        }
      } else if (stage == "concat") {
        // Clip paths stay workdir-relative so the manifest (which lives in
        // the workdir) stays valid after relocation.
        std::vector<ClipRecord> rendered;
        for (const auto& c : board.clips)
          if (c.status == ClipStatus::Rendered) rendered.push_back(c);
        if (rendered.empty())
          throw StageError("concat: no rendered clips to assemble");
        ConcatOptions copts;
        copts.manifest_path = config_.workdir / "concat_manifest.txt";
        if (config_.render.muxer_command) {
          copts.muxer_command = config_.render.muxer_command;
          copts.output_path = config_.workdir / ("film." + config_.render.clip_ext);
        }
        try {
          manifest = build_concat(std::move(rendered), copts);
        } catch (const Error& e) {
          throw StageError(std::string("concat: ") + e.what());
        }
      }

      finish_stage(stage);
      if (opts.stop_after && *opts.stop_after == stage) break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string stage = [&] {
      for (const auto& s : kStages)
        if (board.stage_status[s] == StageStatus::Running) return s;
      return std::string("unknown");
    }();
    board.stage_status[stage] = StageStatus::Failed;
    save(board, config_.workdir);
    checkpoint(stage, StageStatus::Failed, outline_digest);
    throw StageError("stage '" + stage + "' failed: " + e.what());
  }

  for (const auto& w : director.warnings()) result.warnings.push_back(w);
  for (const auto& w : shots_agent.warnings()) result.warnings.push_back(w);
  result.storyboard = std::move(board);
  result.manifest = std::move(manifest);
  return result;
}

std::string inspect(const fs::path& workdir) {
  if (!fs::exists(workdir / "storyboard.json"))
    throw Error("inspect: no storyboard in " + workdir.string());
  const Storyboard board = load(workdir);

  std::ostringstream out;
  out << "Stages\n";
  for (const auto& stage : kStages) {
    auto it = board.stage_status.find(stage);
    out << "  " << std::left << std::setw(12) << stage
        << (it == board.stage_status.end() ? "pending" : to_string(it->second))
        << "\n";
  }
  out << "Scenes: " << board.scenes.size() << "\n";
  for (const auto& scene : board.scenes) {
    out << "  scene " << scene.index << " [" << scene.location
        << "]: " << board.shots_of_scene(scene.index).size() << " shots\n";
  }
  int rendered = 0, failed = 0, pending = 0;
  for (const auto& c : board.clips) {
    if (c.status == ClipStatus::Rendered) ++rendered;
    else if (c.status == ClipStatus::Failed) ++failed;
    else ++pending;
  }
  out << "Clips: " << board.clips.size() << " total, " << rendered
      << " rendered, " << failed << " failed, " << pending << " pending\n";
  out << "References: " << board.references.size() << "\n";
  return out.str();
}

}  // namespace storyreel
