#ifndef STORYREEL_EVALUATION_HPP_
#define STORYREEL_EVALUATION_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "storyreel/gateway.hpp"

namespace storyreel {

// VLM-as-judge harness: four fixed criteria, uniform keyframe sampling,
// rubric prompts, multi-evaluator aggregation, external-metric ingestion and
// the blinded user-study questionnaire.

enum class Criterion {
  ScriptConsistency,
  CameraMovementConsistency,
  VideoQuality,
  RealMovieSimilarity,
};

inline constexpr Criterion kAllCriteria[] = {
    Criterion::ScriptConsistency, Criterion::CameraMovementConsistency,
    Criterion::VideoQuality, Criterion::RealMovieSimilarity};

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

struct JudgeScore {
  std::string evaluator_id;
  Criterion criterion = Criterion::ScriptConsistency;
  int score = 0;  // 1..5
  std::string explanation;
};

// Uniform sampling: k = clamp(floor(duration_s), 8, 12), further clamped to
// frame_count; idx_m = floor(m * (frame_count - 1) / (k - 1)).
std::vector<int> sample_keyframes(int frame_count, double duration_s);

// Prompt order is fixed: evaluator role, criterion, 1-5 rubric, required
// JSON output format; keyframes attach in index order.
std::vector<ChatTurn> build_judge_prompt(Criterion criterion,
                                         const std::vector<std::string>& keyframes,
                                         const std::string& context_text,
                                         const std::filesystem::path& template_dir);

// One judged cell. Score is validated to an integer in 1..5 with one
// re-prompt; a second failure throws EvalError and the cell stays missing.
JudgeScore judge(Gateway& gateway, const EndpointContract& contract,
                 const std::vector<ChatTurn>& prompt,
                 const std::string& evaluator_id, Criterion criterion);

// Arithmetic mean with half-up rounding at two decimals.
double aggregate(const std::vector<double>& scores);

struct EvalCell {
  std::vector<JudgeScore> scores;
  std::optional<double> average;  // absent when no scores arrived
  int missing = 0;
};

struct EvalReport {
  // method -> criterion -> cell
  std::map<std::string, std::map<std::string, EvalCell>> cells;
  std::string granularity;  // "film" or "clip", recorded with the report
};

std::string render_report_table(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

struct Questionnaire {
  std::string document;  // printable, blinded
  std::string key_json;  // unblinding key, stored separately
};

Questionnaire gen_questionnaire(const std::vector<std::string>& methods,
                                const std::vector<std::string>& cases,
                                unsigned seed,
                                const std::filesystem::path& template_dir);

// External metric CSV: header must match the declared metric names.
inline const std::vector<std::string> kExternalMetricColumns = {
    "CLIP-T", "Subj.", "Bg.", "Motion", "Dyn.", "Aesth."};

struct MetricTable {
  std::vector<std::string> columns;
  // method -> metric -> value
  std::map<std::string, std::map<std::string, double>> rows;
};

MetricTable import_external_metrics(const std::filesystem::path& csv_path);

}  // namespace storyreel

#endif  // STORYREEL_EVALUATION_HPP_
