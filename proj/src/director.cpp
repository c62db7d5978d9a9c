#include "storyreel/director.hpp"

#include <algorithm>
#include <set>

#include "storyreel/errors.hpp"
#include "storyreel/prompt_template.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

ReferenceMode reference_mode_from_string(const std::string& s) {
  if (s == "generate") return ReferenceMode::Generate;
  if (s == "user_supplied") return ReferenceMode::UserSupplied;
  if (s == "none") return ReferenceMode::None;
  throw ConfigError("unknown reference mode: " + s);
}

DirectorAgent::DirectorAgent(Gateway& gateway, EndpointContract chat_contract,
                             DirectorConfig config)
    : gateway_(gateway),
      chat_contract_(std::move(chat_contract)),
      config_(std::move(config)) {}

json DirectorAgent::chat_structured(const std::string& prompt) {
  std::vector<ChatTurn> turns{{ChatTurn::Speaker::User, prompt, {}}};
  std::string reply = gateway_.chat(chat_contract_, turns);
  try {
    return extract_structured(reply);
  } catch (const ParseError&) {
    turns.push_back({ChatTurn::Speaker::Assistant, reply, {}});
    turns.push_back({ChatTurn::Speaker::User,
                     "The previous reply contained no valid JSON object. "
                     "Reply again with the required JSON only.",
                     {}});
    reply = gateway_.chat(chat_contract_, turns);
    try {
      return extract_structured(reply);
    } catch (const ParseError& e) {
      throw StageError(std::string("unparsable model reply after re-prompt: ") +
                       e.what());
    }
  }
}

namespace {

std::string profiles_block(const StoryOutline& outline) {
  if (outline.character_profiles.empty()) return "(none given)";
  std::string out;
  for (const auto& [name, desc] : outline.character_profiles)
    out += "- " + name + ": " + desc + "\n";
  return out;
}

std::string require_string(const json& j, const char* field, const char* where) {
  if (!j.contains(field) || !j.at(field).is_string() ||
      j.at(field).get<std::string>().empty())
    throw StageError(std::string(where) + ": reply missing mandatory field '" +
                     field + "'");
  return j.at(field).get<std::string>();
}

}  // namespace

Script DirectorAgent::expand_script(const StoryOutline& outline) {
  auto violations = validate(outline);
  if (!violations.empty())
    throw StageError("invalid outline: " + violations.front());

  auto tmpl =
      PromptTemplate::load(config_.template_dir / "director" / "expand_script.json");
  const std::string prompt = tmpl.render({
      {"title", outline.title},
      {"outline", outline.outline},
      {"character_profiles", profiles_block(outline)},
  });

  json reply = chat_structured(prompt);
  // The reasoning field is required by the schema but never persisted.
  Script script;
  script.genre = require_string(reply, "genre", "expand_script");
  script.logline = require_string(reply, "logline", "expand_script");
  script.storyline = require_string(reply, "storyline", "expand_script");
  if (!reply.contains("characters") || !reply.at("characters").is_array() ||
      reply.at("characters").empty())
    throw StageError("expand_script: reply missing mandatory field 'characters'");
  for (const auto& c : reply.at("characters")) {
    script.characters.push_back({c.value("name", ""), c.value("role", ""),
                                 c.value("appearance", ""),
                                 c.value("personality", "")});
  }
  script.source_outline_digest = util::sha256_hex(outline.outline);

  // Outline characters may be supplemented, never dropped.
  std::set<std::string> have;
  for (const auto& c : script.characters) have.insert(util::normalize_name(c.name));
  for (const auto& [name, desc] : outline.character_profiles) {
    (void)desc;
    if (!have.count(util::normalize_name(name)))
      throw StageError("expand_script: character dropped from script: " + name);
  }
  return script;
}

std::vector<Scene> DirectorAgent::decompose_scenes(const Script& script) {
  auto tmpl = PromptTemplate::load(config_.template_dir / "director" /
                                   "decompose_scenes.json");
  std::string characters;
  for (const auto& c : script.characters)
    characters += "- " + c.name + " (" + c.role + "): " + c.appearance + "; " +
                  c.personality + "\n";
  const std::string prompt = tmpl.render({
      {"genre", script.genre},
      {"logline", script.logline},
      {"characters", characters},
      {"storyline", script.storyline},
  });

  json reply = chat_structured(prompt);
  if (!reply.contains("scenes") || !reply.at("scenes").is_array())
    throw StageError("decompose_scenes: reply missing mandatory field 'scenes'");
  if (reply.at("scenes").empty())
    throw StageError("decompose_scenes: model produced an empty scene list");

  std::set<std::string> known;
  for (const auto& c : script.characters) known.insert(util::normalize_name(c.name));

  std::vector<Scene> scenes;
  std::set<int> seen_indices;
  static const std::set<std::string> fixed_fields = {
      "index", "location", "time_of_day", "plot", "characters", "objective"};
  for (const auto& s : reply.at("scenes")) {
    Scene scene;
    scene.index = s.value("index", 0);
    if (!seen_indices.insert(scene.index).second)
      throw StageError("decompose_scenes: duplicate scene index " +
                       std::to_string(scene.index));
    scene.location = s.value("location", "");
    scene.time_of_day = s.value("time_of_day", "");
    scene.plot = s.value("plot", "");
    scene.characters = s.value("characters", std::vector<std::string>{});
    scene.objective = s.value("objective", "");
    for (const auto& [key, value] : s.items()) {
      if (!fixed_fields.count(key) && value.is_string())
        scene.extra[key] = value.get<std::string>();
    }
    for (const auto& name : scene.characters) {
      if (!known.count(util::normalize_name(name)))
        throw StageError("decompose_scenes: scene " + std::to_string(scene.index) +
                         " references unknown character '" + name + "'");
    }
    scenes.push_back(std::move(scene));
  }

  std::sort(scenes.begin(), scenes.end(),
            [](const Scene& a, const Scene& b) { return a.index < b.index; });
  for (size_t i = 0; i < scenes.size(); ++i) {
    if (scenes[i].index != static_cast<int>(i) + 1)
      throw StageError("decompose_scenes: scene indices not contiguous from 1");
  }
  if (static_cast<int>(scenes.size()) > config_.max_scenes) {
    warnings_.push_back("scene count " + std::to_string(scenes.size()) +
                        " exceeds cap " + std::to_string(config_.max_scenes) +
                        "; truncating");
    scenes.resize(static_cast<size_t>(config_.max_scenes));
  }
  return scenes;
}

namespace {

std::string slug(const std::string& name) {
  std::string out;
  for (char c : util::normalize_name(name))
    out.push_back(c == ' ' ? '_' : c);
  return out;
}

}  // namespace

std::vector<ReferenceAsset> DirectorAgent::build_references(
    const Script& script, const std::vector<Scene>& scenes, ReferenceMode mode,
    const StoryOutline& outline, const EndpointContract& t2i_contract,
    const fs::path& out_dir) {
  std::vector<ReferenceAsset> assets;
  if (mode == ReferenceMode::None) return assets;

  if (mode == ReferenceMode::UserSupplied) {
    if (outline.reference_images.empty())
      throw Error("user_supplied reference mode but the outline carries no images");
    for (const auto& [name, path] : outline.reference_images) {
      if (!fs::exists(path))
        throw Error("user-supplied reference image missing: " + path);
      ReferenceAsset asset;
      asset.kind = ReferenceKind::Character;
      asset.key = name;
      asset.image_path = path;
      asset.prompt_used = "user-supplied";
      assets.push_back(std::move(asset));
    }
    return assets;
  }

  auto char_tmpl = PromptTemplate::load(config_.template_dir / "director" /
                                        "character_reference.json");
  auto scene_tmpl = PromptTemplate::load(config_.template_dir / "director" /
                                         "scene_reference.json");
  fs::create_directories(out_dir);
  for (const auto& c : script.characters) {
    const std::string prompt = char_tmpl.render({{"name", c.name},
                                                 {"appearance", c.appearance},
                                                 {"personality", c.personality},
                                                 {"genre", script.genre}});
    const fs::path out = out_dir / ("char_" + slug(c.name) + ".png");
    try {
      ReferenceAsset asset = gateway_.generate_image(t2i_contract, prompt, out);
      asset.kind = ReferenceKind::Character;
      asset.key = c.name;
      assets.push_back(std::move(asset));
    } catch (const Error& e) {
      throw StageError("reference generation failed for character '" + c.name +
                       "': " + e.what());
    }
  }
  for (const auto& scene : scenes) {
    const std::string prompt = scene_tmpl.render(
        {{"location", scene.location},
         {"time_of_day", scene.time_of_day},
         {"plot", scene.plot},
         {"genre", script.genre}});
    const fs::path out = out_dir / ("scene_" + std::to_string(scene.index) + ".png");
    try {
      ReferenceAsset asset = gateway_.generate_image(t2i_contract, prompt, out);
      asset.kind = ReferenceKind::Scene;
      asset.key = std::to_string(scene.index);
      assets.push_back(std::move(asset));
    } catch (const Error& e) {
      throw StageError("reference generation failed for scene " +
                       std::to_string(scene.index) + ": " + e.what());
    }
  }
  return assets;
}

}  // namespace storyreel
