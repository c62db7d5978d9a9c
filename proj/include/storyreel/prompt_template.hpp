#ifndef STORYREEL_PROMPT_TEMPLATE_HPP_
#define STORYREEL_PROMPT_TEMPLATE_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace storyreel {

// Versioned prompt template. Sections render in order as
// "## heading\nbody\n"; placeholders are {{name}}. Chat templates must carry
// an explicit think-first instruction so agents reason before emitting the
// final structured block.
struct PromptTemplate {
  std::string name;
  std::string version;
  struct Section {
    std::string heading;
    std::string body;
  };
  std::vector<Section> sections;
  std::set<std::string> required_placeholders;
  std::string output_schema;
  bool requires_reasoning = true;

  static PromptTemplate load(const std::filesystem::path& file);

  // Throws Error on an unbound required placeholder or, for reasoning
  // templates, when the rendered text lacks the stepwise instruction.
  std::string render(const std::map<std::string, std::string>& binds) const;
};

}  // namespace storyreel

#endif  // STORYREEL_PROMPT_TEMPLATE_HPP_
