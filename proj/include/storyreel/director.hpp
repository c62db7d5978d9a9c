#ifndef STORYREEL_DIRECTOR_HPP_
#define STORYREEL_DIRECTOR_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "storyreel/gateway.hpp"
#include "storyreel/storyboard.hpp"

namespace storyreel {

// Footage-construction stage 1: outline -> script -> scenes -> references.

enum class ReferenceMode { Generate, UserSupplied, None };

ReferenceMode reference_mode_from_string(const std::string& s);

struct DirectorConfig {
  std::filesystem::path template_dir;  // root containing director/
  int max_scenes = 10;                 // model-chosen k is capped here
};

class DirectorAgent {
 public:
  DirectorAgent(Gateway& gateway, EndpointContract chat_contract,
                DirectorConfig config);

  // Expands the outline into a full script. The outline's characters are
  // supplemented, never dropped; a dropped character is a stage error.
  Script expand_script(const StoryOutline& outline);

  std::vector<Scene> decompose_scenes(const Script& script);

  // mode == Generate also needs a t2i contract; UserSupplied wraps the
  // outline's image paths; None returns the empty list.
  std::vector<ReferenceAsset> build_references(
      const Script& script, const std::vector<Scene>& scenes, ReferenceMode mode,
      const StoryOutline& outline, const EndpointContract& t2i_contract,
      const std::filesystem::path& out_dir);

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  nlohmann::json chat_structured(const std::string& prompt);

  Gateway& gateway_;
  EndpointContract chat_contract_;
  DirectorConfig config_;
  std::vector<std::string> warnings_;
};

}  // namespace storyreel

#endif  // STORYREEL_DIRECTOR_HPP_
