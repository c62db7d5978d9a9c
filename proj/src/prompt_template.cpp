#include "storyreel/prompt_template.hpp"

#include "json.hpp"
#include "storyreel/errors.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

using nlohmann::json;

PromptTemplate PromptTemplate::load(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(util::read_file(file));
  } catch (const std::exception& e) {
    throw ConfigError("bad template file " + file.string() + ": " + e.what());
  }
  PromptTemplate t;
  t.name = j.value("name", file.stem().string());
  t.version = j.value("version", "1");
  for (const auto& s : j.value("sections", json::array()))
    t.sections.push_back({s.value("heading", ""), s.value("body", "")});
  for (const auto& p : j.value("required_placeholders", json::array()))
    t.required_placeholders.insert(p.get<std::string>());
  t.output_schema = j.value("output_schema", "");
  t.requires_reasoning = j.value("requires_reasoning", true);
  return t;
}

namespace {

std::string substitute(const std::string& body,
                       const std::map<std::string, std::string>& binds,
                       std::set<std::string>* seen) {
  std::string out;
  size_t pos = 0;
  while (pos < body.size()) {
    size_t open = body.find("{{", pos);
    if (open == std::string::npos) {
      out += body.substr(pos);
      break;
    }
    size_t close = body.find("}}", open);
    if (close == std::string::npos) {
      out += body.substr(pos);
      break;
    }
    out += body.substr(pos, open - pos);
    std::string key = util::trim(body.substr(open + 2, close - open - 2));
    seen->insert(key);
    auto it = binds.find(key);
    if (it == binds.end())
      throw Error("template placeholder unbound: " + key);
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& binds) const {
  std::set<std::string> seen;
  std::string out;
  for (const auto& section : sections) {
    if (!section.heading.empty()) out += "## " + section.heading + "\n";
    out += substitute(section.body, binds, &seen);
    out += "\n\n";
  }
  if (!output_schema.empty())
    out += "## Output format\n" + output_schema + "\n";
  for (const auto& required : required_placeholders) {
    if (!seen.count(required))
      throw Error("template '" + name + "' required placeholder never rendered: " +
                  required);
  }
  if (requires_reasoning &&
      util::to_lower(out).find("step by step") == std::string::npos)
    throw Error("template '" + name + "' lacks the stepwise reasoning instruction");
  return out;
}

}  // namespace storyreel
