// storyreel command line: outline-to-film pipeline plus the evaluation and
// dataset utilities. Exit codes: 0 success, 2 config, 3 stage, 4 I/O.

#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "storyreel/dataset.hpp"
#include "storyreel/errors.hpp"
#include "storyreel/evaluation.hpp"
#include "storyreel/pipeline.hpp"
#include "storyreel/util.hpp"

namespace fs = std::filesystem;
using namespace storyreel;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitIo = 4;

void print_result(const RunResult& result) {
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "scenes: " << result.storyboard.scenes.size()
            << ", shots: " << result.storyboard.shots.size()
            << ", clips: " << result.storyboard.clips.size() << "\n";
  if (result.manifest) {
    std::cout << "final film: " << result.manifest->clip_paths.size()
              << " clips, " << result.manifest->total_frames << " frames at "
              << result.manifest->fps << " fps\n";
  }
}

int run_eval(const fs::path& report_dir, const std::string& metrics_csv) {
  const fs::path cfg_path = report_dir / "eval_config.json";
  if (!fs::exists(cfg_path))
    throw ConfigError("eval: missing " + cfg_path.string());
  json cfg = json::parse(util::read_file(cfg_path));
  const fs::path template_dir =
      cfg.value("template_dir", std::string("templates"));

  Gateway gateway;
  EvalReport report;
  report.granularity = cfg.value("granularity", "film");

  std::vector<std::pair<std::string, EndpointContract>> evaluators;
  for (const auto& e : cfg.value("evaluators", json::array())) {
    EndpointContract c;
    c.role = Role::Judge;
    c.base_url = e.value("base_url", "");
    c.model_name = e.value("model_name", "");
    c.api_key_env = e.value("api_key_env", "");
    if (e.contains("mock_script"))
      c.mock_script = fs::path(e.at("mock_script").get<std::string>());
    evaluators.emplace_back(e.value("id", "judge"), c);
  }

  for (const auto& v : cfg.value("videos", json::array())) {
    const std::string method = v.value("method", "unknown");
    const auto keyframes = v.value("keyframes", std::vector<std::string>{});
    const json contexts = v.value("context", json::object());
    for (Criterion criterion : kAllCriteria) {
      const std::string cname = to_string(criterion);
      auto& cell = report.cells[method][cname];
      auto prompt = build_judge_prompt(
          criterion, keyframes, contexts.value(cname, ""), template_dir);
      for (const auto& [id, contract] : evaluators) {
        try {
          cell.scores.push_back(judge(gateway, contract, prompt, id, criterion));
        } catch (const EvalError&) {
          ++cell.missing;  // recorded as missing, never fabricated
        }
      }
      if (!cell.scores.empty()) {
        std::vector<double> values;
        for (const auto& s : cell.scores) values.push_back(s.score);
        cell.average = aggregate(values);
      }
    }
  }

  util::atomic_write(report_dir / "report.txt", render_report_table(report));
  util::atomic_write(report_dir / "report.json", report_to_json(report));
  std::cout << render_report_table(report);

  if (!metrics_csv.empty()) {
    MetricTable table = import_external_metrics(metrics_csv);
    std::cout << "\nExternal metrics\n";
    for (const auto& [m, values] : table.rows) {
      std::cout << m << ":";
      for (const auto& col : table.columns)
        std::cout << " " << col << "=" << values.at(col);
      std::cout << "\n";
    }
  }
  return 0;
}

// The stored copy is reloaded from inside the workdir, so every relative
// path must be pinned to the original config's directory first.
json absolutize_config(const fs::path& config_path) {
  json j = json::parse(util::read_file(config_path));
  const fs::path base =
      fs::absolute(config_path).has_parent_path()
          ? fs::absolute(config_path).parent_path()
          : fs::current_path();
  auto absolutize = [&](json& node, const char* key) {
    if (!node.contains(key) || !node.at(key).is_string()) return;
    fs::path p = node.at(key).get<std::string>();
    if (!p.is_absolute()) node[key] = (base / p).string();
  };
  if (!j.contains("template_dir")) j["template_dir"] = "templates";
  absolutize(j, "story");
  absolutize(j, "workdir");
  absolutize(j, "template_dir");
  if (j.contains("endpoints") && j.at("endpoints").is_object()) {
    for (auto& [key, endpoint] : j.at("endpoints").items()) {
      (void)key;
      absolutize(endpoint, "mock_script");
    }
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"storyreel: outline-to-storyboard-to-film pipeline"};
  app.require_subcommand(1);

  std::string config_path, workdir, report_dir, corpus_path, dataset_out;
  std::string metrics_csv;
  bool no_rsg = false, no_cli = false;
  unsigned seed = 0;

  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline");
  run_cmd->add_option("--config", config_path, "Pipeline config file")
      ->required();
  run_cmd->add_flag("--no-rsg", no_rsg,
                    "Plan shots independently, without prior-shot context");
  run_cmd->add_flag("--no-cli", no_cli, "Skip cinematic language injection");
  run_cmd->add_option("--seed", seed, "Run seed");

  auto* resume_cmd = app.add_subcommand("resume", "Resume an interrupted run");
  resume_cmd->add_option("workdir", workdir, "Run workdir")->required();
  resume_cmd->add_flag("--no-rsg", no_rsg, "");
  resume_cmd->add_flag("--no-cli", no_cli, "");

  auto* inspect_cmd = app.add_subcommand("inspect", "Show run status");
  inspect_cmd->add_option("workdir", workdir, "Run workdir")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Judge videos and build reports");
  eval_cmd->add_option("--report", report_dir, "Report dir with eval_config.json")
      ->required();
  eval_cmd->add_option("--metrics-csv", metrics_csv,
                       "External metric CSV to ingest");

  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset utilities");
  auto* build_cmd = dataset_cmd->add_subcommand(
      "build", "Build the cinematic instruction-tuning dataset");
  build_cmd->add_option("--corpus", corpus_path, "Corpus manifest")->required();
  build_cmd->add_option("--out", dataset_out, "Output dataset file (JSONL)")
      ->required();
  std::string dataset_config_path;
  build_cmd->add_option("--config", dataset_config_path,
                        "Pipeline config providing judge/chat endpoints")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      PipelineConfig cfg = PipelineConfig::load(config_path);
      cfg.seed = seed;
      fs::create_directories(cfg.workdir);
      // Keep a copy of the config so `resume <workdir>` can reload it.
      util::atomic_write(cfg.workdir / "run_config.json",
                         absolutize_config(config_path).dump(2) + "\n");
      Pipeline pipeline(cfg);
      RunOptions opts;
      opts.no_rsg = no_rsg;
      opts.no_cli = no_cli;
      print_result(pipeline.run(opts));
    } else if (*resume_cmd) {
      const fs::path stored = fs::path(workdir) / "run_config.json";
      if (!fs::exists(stored))
        throw ResumeError("no run_config.json in workdir; cannot resume");
      PipelineConfig cfg = PipelineConfig::load(stored);
      cfg.workdir = workdir;
      Pipeline pipeline(cfg);
      RunOptions opts;
      opts.no_rsg = no_rsg;
      opts.no_cli = no_cli;
      print_result(pipeline.resume(opts));
    } else if (*inspect_cmd) {
      std::cout << inspect(workdir);
    } else if (*eval_cmd) {
      return run_eval(report_dir, metrics_csv);
    } else if (*build_cmd) {
      PipelineConfig cfg = PipelineConfig::load(dataset_config_path);
      Gateway gateway;
      DatasetConfig dcfg;
      dcfg.template_dir = cfg.template_dir;
      auto judge_it = cfg.endpoints.find("judge");
      auto chat_it = cfg.endpoints.find("chat");
      if (judge_it == cfg.endpoints.end() || chat_it == cfg.endpoints.end())
        throw ConfigError("dataset build needs 'judge' and 'chat' endpoints");
      DatasetBuilder builder(gateway, judge_it->second, chat_it->second, dcfg);
      FineTuneManifest manifest =
          builder.build_dataset(corpus_path, dataset_out);
      write_manifest(manifest, fs::path(dataset_out).string() + ".manifest.json");
      std::cout << "pairs: " << manifest.pair_count
                << ", skipped: " << manifest.skip_count
                << ", digest: " << manifest.dataset_digest << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ResumeError& e) {
    std::cerr << "resume error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PersistenceError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return kExitStage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
