#include "storyreel/cinematography.hpp"

#include <set>

#include "storyreel/errors.hpp"
#include "storyreel/prompt_template.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

using nlohmann::json;

CinematographyAgent::CinematographyAgent(Gateway& gateway,
                                         EndpointContract chat_contract,
                                         std::filesystem::path template_dir)
    : gateway_(gateway),
      chat_contract_(std::move(chat_contract)),
      template_dir_(std::move(template_dir)) {}

json CinematographyAgent::chat_structured(const EndpointContract& contract,
                                          const std::string& prompt,
                                          bool reprompt) {
  std::vector<ChatTurn> turns{{ChatTurn::Speaker::User, prompt, {}}};
  std::string reply = gateway_.chat(contract, turns);
  try {
    return extract_structured(reply);
  } catch (const ParseError& e) {
    if (!reprompt)
      throw StageError(std::string("unparsable model reply: ") + e.what());
    turns.push_back({ChatTurn::Speaker::Assistant, reply, {}});
    turns.push_back({ChatTurn::Speaker::User,
                     "The previous reply contained no valid JSON object. "
                     "Reply again with the required JSON only.",
                     {}});
    reply = gateway_.chat(contract, turns);
    try {
      return extract_structured(reply);
    } catch (const ParseError& e2) {
      throw StageError(std::string("unparsable model reply after re-prompt: ") +
                       e2.what());
    }
  }
}

namespace {

std::string scene_block(const Scene& scene) {
  std::string out;
  out += "Scene " + std::to_string(scene.index) + " — " + scene.location;
  if (!scene.time_of_day.empty()) out += " (" + scene.time_of_day + ")";
  out += "\nPlot: " + scene.plot + "\nObjective: " + scene.objective;
  if (!scene.characters.empty()) {
    out += "\nCharacters present:";
    for (const auto& c : scene.characters) out += " " + c + ";";
  }
  return out;
}

std::string script_block(const Script& script) {
  std::string out = "Genre: " + script.genre + "\nLogline: " + script.logline +
                    "\nStoryline: " + script.storyline + "\nCast:\n";
  for (const auto& c : script.characters)
    out += "- " + c.name + " (" + c.role + ")\n";
  return out;
}

std::set<std::string> name_set(const std::vector<std::string>& names) {
  std::set<std::string> out;
  for (const auto& n : names) out.insert(util::normalize_name(n));
  return out;
}

}  // namespace

ShotDraft CinematographyAgent::next_shot(const Scene& scene, const Script& script,
                                         const std::optional<ShotDescription>& prev,
                                         const RecursionConfig& cfg) {
  const char* which = prev ? "next_shot.json" : "first_shot.json";
  auto tmpl =
      PromptTemplate::load(template_dir_ / "cinematography" / which);
  std::map<std::string, std::string> binds = {
      {"scene", scene_block(scene)},
      {"script", script_block(script)},
  };
  if (prev) binds["previous_shot"] = prev->content;
  const std::string prompt = tmpl.render(binds);

  json reply = chat_structured(chat_contract_, prompt,
                               cfg.reprompt_on_parse_failure);
  auto parse_draft = [](const json& j) -> std::optional<ShotDraft> {
    if (!j.contains("content") || !j.at("content").is_string() ||
        j.at("content").get<std::string>().empty())
      return std::nullopt;
    if (!j.contains("terminal") || !j.at("terminal").is_boolean())
      return std::nullopt;
    ShotDraft d;
    d.content = j.at("content").get<std::string>();
    d.characters = j.value("characters", std::vector<std::string>{});
    d.terminal = j.at("terminal").get<bool>();
    return d;
  };

  if (auto draft = parse_draft(reply)) return *draft;
  if (cfg.reprompt_on_parse_failure) {
    std::vector<ChatTurn> turns{
        {ChatTurn::Speaker::User, prompt, {}},
        {ChatTurn::Speaker::Assistant, reply.dump(), {}},
        {ChatTurn::Speaker::User,
         "The reply must be a JSON object with string field \"content\", "
         "array field \"characters\" and boolean field \"terminal\". "
         "Reply again.",
         {}}};
    try {
      json retry = extract_structured(gateway_.chat(chat_contract_, turns));
      if (auto draft = parse_draft(retry)) return *draft;
    } catch (const ParseError&) {
    }
  }
  throw StageError("next_shot: reply missing content/terminal fields");
}

std::vector<ShotDescription> CinematographyAgent::plan_shots(
    const Scene& scene, const Script& script, const RecursionConfig& cfg) {
  std::vector<ShotDescription> shots;
  std::optional<ShotDescription> prev;
  for (int i = 1; i <= cfg.max_shots_per_scene; ++i) {
    ShotDraft draft;
    try {
      draft = next_shot(scene, script,
                        cfg.condition_on_previous ? prev : std::nullopt, cfg);
    } catch (const StageError& e) {
      throw StageError("scene " + std::to_string(scene.index) + ", shot " +
                       std::to_string(i) + ": " + e.what());
    }
    ShotDescription shot;
    shot.scene_index = scene.index;
    shot.shot_index = i;
    shot.content = draft.content;
    shot.characters = draft.characters;
    shot.shot_type = i == 1 ? ShotType::SceneStart : ShotType::SceneMid;
    bool stop = draft.terminal;
    if (!stop && i == cfg.max_shots_per_scene) {
      warnings_.push_back("scene " + std::to_string(scene.index) +
                          ": shot cap " + std::to_string(cfg.max_shots_per_scene) +
                          " reached without a terminal shot; forcing scene_end");
      stop = true;
    }
    if (stop) shot.shot_type = ShotType::SceneEnd;
    prev = shot;
    shots.push_back(std::move(shot));
    if (stop) break;
  }
  return shots;
}

ShotDescription CinematographyAgent::inject_cinematic(
    const ShotDescription& draft_shot, const EndpointContract& contract) {
  if (!draft_shot.cinematic.empty())
    throw Error("inject_cinematic: shot already carries cinematic attributes");

  auto tmpl =
      PromptTemplate::load(template_dir_ / "cinematography" / "injection.json");
  std::string characters;
  for (const auto& c : draft_shot.characters) characters += c + "; ";
  const std::string prompt = tmpl.render({
      {"content", draft_shot.content},
      {"characters", characters.empty() ? "(none)" : characters},
  });

  auto attempt = [&](const json& reply) -> std::optional<ShotDescription> {
    if (!reply.contains("content") || !reply.at("content").is_string())
      return std::nullopt;
    CinematicAttributes attrs;
    const json c = reply.value("cinematic", json::object());
    attrs.shot_size = c.value("shot_size", "");
    attrs.camera_angle = c.value("camera_angle", "");
    attrs.camera_motion = c.value("camera_motion", "");
    attrs.framing = c.value("framing", "");
    attrs.lighting = c.value("lighting", "");
    if (attrs.empty()) return std::nullopt;
    ShotDescription out = draft_shot;
    out.raw_content = draft_shot.content;
    out.content = reply.at("content").get<std::string>();
    out.cinematic = attrs;
    if (reply.contains("characters"))
      out.characters = reply.at("characters").get<std::vector<std::string>>();
    return out;
  };

  json reply = chat_structured(contract, prompt, true);
  std::optional<ShotDescription> result = attempt(reply);
  if (!result) {
    std::vector<ChatTurn> turns{
        {ChatTurn::Speaker::User, prompt, {}},
        {ChatTurn::Speaker::Assistant, reply.dump(), {}},
        {ChatTurn::Speaker::User,
         "The rewrite must populate at least one cinematic attribute "
         "(shot_size, camera_angle, camera_motion, framing, lighting). "
         "Reply again with the required JSON.",
         {}}};
    try {
      json retry = extract_structured(gateway_.chat(contract, turns));
      result = attempt(retry);
    } catch (const ParseError&) {
    }
    if (!result)
      throw StageError("injection produced no cinematic attributes for shot (" +
                       std::to_string(draft_shot.scene_index) + "," +
                       std::to_string(draft_shot.shot_index) + ")");
  }

  if (name_set(result->characters) != name_set(draft_shot.characters))
    throw StageError("injection changed the character set for shot (" +
                     std::to_string(draft_shot.scene_index) + "," +
                     std::to_string(draft_shot.shot_index) + ")");
  return *result;
}

}  // namespace storyreel
