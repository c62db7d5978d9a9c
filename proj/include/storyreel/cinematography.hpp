#ifndef STORYREEL_CINEMATOGRAPHY_HPP_
#define STORYREEL_CINEMATOGRAPHY_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "storyreel/gateway.hpp"
#include "storyreel/storyboard.hpp"

namespace storyreel {

// Shot planning: recursive generation with typed termination, then a
// cinematic-language refinement pass over the raw drafts.

struct ShotDraft {
  std::string content;
  std::vector<std::string> characters;
  bool terminal = false;  // model's claim that this shot ends the scene
};

struct RecursionConfig {
  int max_shots_per_scene = 12;
  bool reprompt_on_parse_failure = true;
  // Ablation arm: drop the previous-shot conditioning entirely.
  bool condition_on_previous = true;
};

class CinematographyAgent {
 public:
  CinematographyAgent(Gateway& gateway, EndpointContract chat_contract,
                      std::filesystem::path template_dir);

  // One recursion step. With no previous shot the prompt carries scene and
  // script context only; otherwise it embeds the previous content verbatim.
  ShotDraft next_shot(const Scene& scene, const Script& script,
                      const std::optional<ShotDescription>& prev,
                      const RecursionConfig& cfg);

  // Runs the recursion for one scene: stops on the terminal flag or at the
  // cap (the capped shot is retyped scene_end and a warning is logged).
  std::vector<ShotDescription> plan_shots(const Scene& scene, const Script& script,
                                          const RecursionConfig& cfg);

  // Rewrites one raw draft through the specialist endpoint; fills cinematic
  // attributes, preserves the character set, keeps the original in
  // raw_content.
  ShotDescription inject_cinematic(const ShotDescription& draft_shot,
                                   const EndpointContract& contract);

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  nlohmann::json chat_structured(const EndpointContract& contract,
                                 const std::string& prompt, bool reprompt);

  Gateway& gateway_;
  EndpointContract chat_contract_;
  std::filesystem::path template_dir_;
  std::vector<std::string> warnings_;
};

}  // namespace storyreel

#endif  // STORYREEL_CINEMATOGRAPHY_HPP_
