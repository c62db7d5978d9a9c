#include "storyreel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "storyreel/errors.hpp"
#include "storyreel/prompt_template.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::ScriptConsistency: return "script_consistency";
    case Criterion::CameraMovementConsistency: return "camera_movement_consistency";
    case Criterion::VideoQuality: return "video_quality";
    case Criterion::RealMovieSimilarity: return "real_movie_similarity";
  }
  return "script_consistency";
}

Criterion criterion_from_string(const std::string& s) {
  for (Criterion c : kAllCriteria)
    if (s == to_string(c)) return c;
  throw Error("unknown criterion: " + s);
}

std::vector<int> sample_keyframes(int frame_count, double duration_s) {
  if (frame_count < 1) throw Error("sample_keyframes: frame_count must be >= 1");
  int k = static_cast<int>(std::floor(duration_s));
  k = std::clamp(k, 8, 12);
  k = std::min(k, frame_count);
  if (k <= 1) return {0};
  std::vector<int> indices;
  indices.reserve(static_cast<size_t>(k));
  for (int m = 0; m < k; ++m) {
    long long idx = static_cast<long long>(m) * (frame_count - 1) / (k - 1);
    indices.push_back(static_cast<int>(idx));
  }
  return indices;
}

std::vector<ChatTurn> build_judge_prompt(Criterion criterion,
                                         const std::vector<std::string>& keyframes,
                                         const std::string& context_text,
                                         const fs::path& template_dir) {
  if (keyframes.empty())
    throw Error("build_judge_prompt: at least one keyframe is required");
  auto tmpl = PromptTemplate::load(template_dir / "evaluation" /
                                   (std::string(to_string(criterion)) + ".json"));
  const std::string body = tmpl.render({
      {"context", context_text},
      {"keyframe_count", std::to_string(keyframes.size())},
  });
  std::vector<ChatTurn> turns;
  turns.push_back({ChatTurn::Speaker::System,
                   "You are a film-industry evaluation expert scoring generated "
                   "videos from sampled keyframes.",
                   {}});
  ChatTurn user{ChatTurn::Speaker::User, body, {}};
  user.image_paths = keyframes;
  turns.push_back(std::move(user));
  return turns;
}

JudgeScore judge(Gateway& gateway, const EndpointContract& contract,
                 const std::vector<ChatTurn>& prompt,
                 const std::string& evaluator_id, Criterion criterion) {
  if (contract.role != Role::Judge)
    throw ConfigError("judge requires a judge-role contract");

  auto try_parse = [&](const std::string& reply) -> std::optional<JudgeScore> {
    json j;
    try {
      j = extract_structured(reply);
    } catch (const ParseError&) {
      return std::nullopt;
    }
    if (!j.contains("score") || !j.at("score").is_number_integer())
      return std::nullopt;
    const int score = j.at("score").get<int>();
    if (score < 1 || score > 5) return std::nullopt;
    JudgeScore out;
    out.evaluator_id = evaluator_id;
    out.criterion = criterion;
    out.score = score;
    out.explanation = j.value("explanation", "");
    return out;
  };

  std::vector<ChatTurn> turns = prompt;
  std::string reply = gateway.chat(contract, turns);
  if (auto score = try_parse(reply)) return *score;

  turns.push_back({ChatTurn::Speaker::Assistant, reply, {}});
  turns.push_back({ChatTurn::Speaker::User,
                   "The reply must be a JSON object with an integer \"score\" "
                   "between 1 and 5 and an \"explanation\" string. Reply again.",
                   {}});
  reply = gateway.chat(contract, turns);
  if (auto score = try_parse(reply)) return *score;
  throw EvalError("judge produced no valid score for evaluator '" + evaluator_id +
                  "', criterion " + to_string(criterion));
}

double aggregate(const std::vector<double>& scores) {
  if (scores.empty()) throw EvalError("aggregate: empty score group");
  return util::mean_half_up_2dp(scores);
}

std::string render_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Method";
  for (Criterion c : kAllCriteria) out << std::setw(30) << to_string(c);
  out << "\n";
  for (const auto& [method, by_criterion] : report.cells) {
    out << std::setw(24) << method;
    for (Criterion c : kAllCriteria) {
      auto it = by_criterion.find(to_string(c));
      std::ostringstream cell;
      if (it == by_criterion.end() || !it->second.average) {
        cell << "absent";
      } else {
        cell << std::fixed << std::setprecision(2) << *it->second.average;
        if (it->second.missing > 0)
          cell << " (" << it->second.missing << " missing)";
      }
      out << std::setw(30) << cell.str();
    }
    out << "\n";
  }
  if (!report.granularity.empty())
    out << "granularity: " << report.granularity << "\n";
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["granularity"] = report.granularity;
  for (const auto& [method, by_criterion] : report.cells) {
    for (const auto& [criterion, cell] : by_criterion) {
      nlohmann::ordered_json jc;
      jc["scores"] = json::array();
      for (const auto& s : cell.scores)
        jc["scores"].push_back({{"evaluator", s.evaluator_id},
                                {"score", s.score},
                                {"explanation", s.explanation}});
      if (cell.average) jc["average"] = *cell.average;
      jc["missing"] = cell.missing;
      j["methods"][method][criterion] = jc;
    }
  }
  return j.dump(2) + "\n";
}

Questionnaire gen_questionnaire(const std::vector<std::string>& methods,
                                const std::vector<std::string>& cases,
                                unsigned seed, const fs::path& template_dir) {
  if (methods.size() < 2)
    throw Error("gen_questionnaire: at least two methods are required");
  if (methods.size() > 26)
    throw Error("gen_questionnaire: label alphabet supports at most 26 methods");

  const std::string questions =
      util::read_file(template_dir / "evaluation" / "user_study_questions.txt");

  std::mt19937 rng(seed);
  std::ostringstream doc;
  nlohmann::ordered_json key;
  doc << "Video comparison study\n"
      << "Rate each video from 1 (very poor) to 5 (excellent) on every "
         "question below. Videos are labeled anonymously; labels are "
         "reshuffled per case.\n\n";
  for (const auto& case_id : cases) {
    std::vector<std::string> order = methods;
    std::shuffle(order.begin(), order.end(), rng);
    doc << "=== Case " << case_id << " ===\n";
    nlohmann::ordered_json case_key = nlohmann::ordered_json::object();
    for (size_t i = 0; i < order.size(); ++i) {
      const std::string label(1, static_cast<char>('A' + i));
      doc << "Video " << label << "\n";
      case_key[label] = order[i];
    }
    doc << "\n" << questions << "\n";
    key[case_id] = case_key;
  }
  Questionnaire q;
  q.document = doc.str();
  q.key_json = key.dump(2) + "\n";
  return q;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(util::trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

MetricTable import_external_metrics(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error("metric import: cannot open " + csv_path.string());
  std::string header;
  if (!std::getline(in, header) || util::trim(header).empty())
    throw Error("metric import: empty file: " + csv_path.string());

  auto columns = split_csv_line(header);
  std::vector<std::string> expected = {"Method"};
  expected.insert(expected.end(), kExternalMetricColumns.begin(),
                  kExternalMetricColumns.end());
  if (columns != expected) {
    std::string msg = "metric import: header mismatch; expected";
    for (const auto& c : expected) msg += " '" + c + "'";
    msg += " but got";
    for (const auto& c : columns) msg += " '" + c + "'";
    throw Error(msg);
  }

  MetricTable table;
  table.columns = kExternalMetricColumns;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != expected.size())
      throw Error("metric import: line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(expected.size()));
    const std::string method = fields[0];
    for (size_t i = 1; i < fields.size(); ++i) {
      try {
        table.rows[method][expected[i]] = std::stod(fields[i]);
      } catch (const std::exception&) {
        throw Error("metric import: non-numeric value '" + fields[i] +
                    "' in column " + expected[i]);
      }
    }
  }
  return table;
}

}  // namespace storyreel
