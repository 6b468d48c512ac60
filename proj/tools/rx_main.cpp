// rx: command-line front end for the retrieval-and-execution pipeline.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rx/config.hpp"
#include "rx/error.hpp"
#include "rx/pipeline.hpp"
#include "rx/stabilization.hpp"
#include "rx/synth.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kValidation = 2, kStage = 3, kTransport = 4 };

int exit_code(rx::ErrorKind kind) {
  switch (kind) {
    case rx::ErrorKind::Transport:
      return kTransport;
    case rx::ErrorKind::InvalidArgument:
    case rx::ErrorKind::Schema:
    case rx::ErrorKind::MissingAsset:
    case rx::ErrorKind::CorruptDescriptorFile:
    case rx::ErrorKind::Io:
      return kValidation;
    default:
      return kStage;
  }
}

/// Options shared by every verb that runs part of the pipeline.
struct Common {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value configuration file");
    cmd->add_option("--set", sets, "override one configuration key (key=value)");
  }

  rx::PipelineConfig load() const {
    std::map<std::string, std::string> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw rx::Error(rx::ErrorKind::InvalidArgument, "--set expects key=value: " + s);
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& [k, v] : flags) overrides[k] = v;
    return rx::load_config(config_file ? std::optional<fs::path>(*config_file) : std::nullopt, overrides);
  }
};

json span_json(const rx::Recording& view, const rx::ClipSpan& s) {
  return {{"start_s", s.start_s},
          {"end_s", s.end_s},
          {"start_frame", s.start_frame},
          {"end_frame", s.end_frame},
          {"original_start_s", rx::original_span_start(view, s)},
          {"original_end_s", rx::original_span_end(view, s)}};
}

std::vector<rx::ExportFormat> parse_formats(const std::string& list) {
  std::vector<rx::ExportFormat> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(rx::parse_export_format(item));
  if (out.empty()) throw rx::Error(rx::ErrorKind::InvalidArgument, "no export formats given");
  return out;
}

rx::Recording presence_view(const rx::Recording& rec, const rx::PipelineConfig& config) {
  return rx::segment_by_presence(rec, rec.hands.timeline(rec.frame_count()), config.min_gap);
}

void print(const json& doc) { std::cout << rx::dump_json(doc); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rx: retrieve human demonstrations and turn them into gripper trajectories"};
  app.require_subcommand(1);

  // ingest
  std::string manifest;
  auto* ingest = app.add_subcommand("ingest", "validate and index a recording manifest");
  ingest->add_option("manifest", manifest, "recording manifest (JSON)")->required();

  // retrieve
  Common retrieve_opts;
  std::string command_text;
  std::string vlm_script;
  auto* retrieve = app.add_subcommand("retrieve", "retrieve clip spans for a command");
  retrieve->add_option("recording", manifest, "recording manifest")->required();
  retrieve->add_option("--command", command_text, "language command")->required();
  retrieve->add_option("--vlm-script", vlm_script, "mock VLM script (JSON)");
  retrieve_opts.add_to(retrieve);

  // execute
  Common execute_opts;
  std::string live_manifest, backend, out_dir, formats = "json";
  std::optional<std::uint64_t> seed;
  auto* execute = app.add_subcommand("execute", "run the full pipeline for a command and a live frame");
  execute->add_option("recording", manifest, "recording manifest")->required();
  execute->add_option("--command", command_text, "language command")->required();
  execute->add_option("--live", live_manifest, "one-frame live manifest")->required();
  execute->add_option("--backend", backend, "sequence backend")->check(CLI::IsMember({"baseline", "llm"}));
  execute->add_option("--seed", seed, "random seed");
  execute->add_option("--vlm-script", vlm_script, "mock VLM script (JSON)");
  execute->add_option("--out", out_dir, "write exports here instead of printing JSON");
  execute->add_option("--formats", formats, "comma-separated subset of json,ply,svg");
  execute_opts.add_to(execute);

  // eval-retrieval
  Common eval_opts;
  std::string annotations;
  std::optional<double> tolerance;
  auto* eval = app.add_subcommand("eval-retrieval", "score retrieval against annotated spans");
  eval->add_option("recording", manifest, "recording manifest")->required();
  eval->add_option("--annotations", annotations, "ground truth {task: [[start_s, end_s], ...]}")->required();
  eval->add_option("--tolerance", tolerance, "endpoint tolerance in seconds (default 3.0)");
  eval->add_option("--vlm-script", vlm_script, "mock VLM script (JSON)");
  eval_opts.add_to(eval);

  // stabilize
  Common stabilize_opts;
  std::string clip;
  auto* stabilize = app.add_subcommand("stabilize", "estimate per-frame camera poses of a clip");
  stabilize->add_option("recording", manifest, "recording manifest")->required();
  stabilize->add_option("--clip", clip, "start,end in seconds of the recording")->required();
  stabilize_opts.add_to(stabilize);

  // export
  std::string result_path;
  auto* exp = app.add_subcommand("export", "re-export a result file");
  exp->add_option("result", result_path, "result.json written by execute")->required();
  exp->add_option("--formats", formats, "comma-separated subset of json,ply,svg")->required();
  exp->add_option("--out", out_dir, "output directory (default: next to the result)");

  // synth
  std::string synth_dir;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "write a synthetic desk scene for trying the pipeline");
  synth->add_option("dir", synth_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*ingest) {
      const rx::Recording rec = rx::ingest(manifest);
      int with_hands = 0;
      for (int i = 0; i < rec.frame_count(); ++i) with_hands += rec.hands.find(i) ? 1 : 0;
      print({{"recording_id", rec.id},
             {"frames", rec.frame_count()},
             {"fps", rec.fps},
             {"duration_s", rec.duration()},
             {"frames_with_hands", with_hands}});
      return kOk;
    }

    if (*retrieve) {
      if (!vlm_script.empty()) retrieve_opts.flags["vlm_script"] = vlm_script;
      const auto config = retrieve_opts.load();
      const rx::Recording rec = rx::ingest(manifest);
      auto components = rx::make_components(config);
      const rx::Command command(command_text);
      const rx::Recording view = presence_view(rec, config);
      json spans = json::array();
      for (const auto& s : rx::retrieve_clips(*components.vlm, view, command)) spans.push_back(span_json(view, s));
      print({{"command", command.text},
             {"heuristic", rx::to_string(rx::select_heuristic(*components.vlm, command))},
             {"spans", spans}});
      return kOk;
    }

    if (*execute) {
      if (!vlm_script.empty()) execute_opts.flags["vlm_script"] = vlm_script;
      if (!backend.empty()) execute_opts.flags["backend"] = backend;
      if (seed) execute_opts.flags["seed"] = std::to_string(*seed);
      const auto config = execute_opts.load();
      const auto export_formats = parse_formats(formats);
      const rx::Recording rec = rx::ingest(manifest);
      const rx::LiveFrame live = rx::load_live_frame(live_manifest);
      const rx::ExecutionResult result = rx::execute_command(rec, live, rx::Command(command_text), config);
      if (out_dir.empty()) {
        print(rx::result_to_json(result));
      } else {
        for (const auto& p : rx::export_result(result, out_dir, export_formats)) std::cout << p.string() << '\n';
      }
      if (!result.ok()) {
        const auto& f = *result.diagnostics.failure;
        std::cerr << "rx: stage '" << f.stage << "' failed (" << rx::to_string(f.kind) << "): " << f.message << '\n';
        return f.kind == rx::ErrorKind::Transport ? kTransport : kStage;
      }
      return kOk;
    }

    if (*eval) {
      if (!vlm_script.empty()) eval_opts.flags["vlm_script"] = vlm_script;
      if (tolerance) {
        std::ostringstream t;
        t.precision(17);
        t << *tolerance;
        eval_opts.flags["retrieval_tolerance"] = t.str();
      }
      const auto config = eval_opts.load();
      const rx::Recording rec = rx::ingest(manifest);
      const rx::Recording view = presence_view(rec, config);
      auto components = rx::make_components(config);
      json tasks = json::object();
      std::vector<rx::ClipSpan> all_predicted, all_truth;
      for (const auto& [task, truth] : rx::read_annotations(annotations)) {
        std::vector<rx::ClipSpan> predicted;
        try {
          for (const auto& s : rx::retrieve_clips(*components.vlm, view, rx::Command(task)))
            predicted.push_back({rx::original_span_start(view, s), rx::original_span_end(view, s), 0, -1});
        } catch (const rx::Error& e) {
          if (e.kind() != rx::ErrorKind::EmptyRetrieval) throw;
        }
        const auto score = rx::evaluate_retrieval(predicted, truth, config.retrieval_tolerance);
        tasks[task] = {{"precision", score.precision ? json(*score.precision) : json(nullptr)},
                       {"recall", score.recall ? json(*score.recall) : json(nullptr)},
                       {"matches", score.matches},
                       {"predicted", predicted.size()},
                       {"ground_truth", truth.size()}};
        all_predicted.insert(all_predicted.end(), predicted.begin(), predicted.end());
        all_truth.insert(all_truth.end(), truth.begin(), truth.end());
      }
      int matches = 0;
      for (const auto& [task, s] : tasks.items()) matches += s["matches"].get<int>();
      json overall{{"matches", matches},
                   {"predicted", all_predicted.size()},
                   {"ground_truth", all_truth.size()},
                   {"precision", all_predicted.empty() ? json(nullptr) : json(double(matches) / all_predicted.size())},
                   {"recall", all_truth.empty() ? json(nullptr) : json(double(matches) / all_truth.size())}};
      print({{"tolerance_s", config.retrieval_tolerance}, {"tasks", tasks}, {"overall", overall}});
      return kOk;
    }

    if (*stabilize) {
      const auto config = stabilize_opts.load();
      const auto comma = clip.find(',');
      if (comma == std::string::npos) throw rx::Error(rx::ErrorKind::InvalidArgument, "--clip expects start,end");
      double start = 0, end = 0;
      try {
        start = std::stod(clip.substr(0, comma));
        end = std::stod(clip.substr(comma + 1));
      } catch (const std::exception&) {
        throw rx::Error(rx::ErrorKind::InvalidArgument, "--clip expects two numbers: " + clip);
      }
      const rx::Recording rec = rx::ingest(manifest);
      if (!(end > start)) throw rx::Error(rx::ErrorKind::InvalidArgument, "--clip end must exceed start");
      const rx::ClipSpan span = rx::make_span(start, end, rec.fps, rec.frame_count());
      const auto& track_file = rec.frames[static_cast<std::size_t>(span.start_frame)].tracks;
      if (track_file.empty())
        throw rx::Error(rx::ErrorKind::MissingAsset, "frame " + std::to_string(span.start_frame) + " references no track file");
      std::vector<int> ids;
      std::vector<rx::DepthMap> depths;
      for (int f = span.start_frame; f <= span.end_frame; ++f) {
        ids.push_back(f);
        depths.push_back(rx::load_depth(rec, f));
      }
      rx::StabilizationParams params;
      params.ransac = {config.ransac_threshold, config.ransac_iterations};
      params.seed = config.seed;
      const auto poses = rx::estimate_frame_poses(rx::read_track_file(track_file), ids, depths, rec.intrinsics, params);
      json frames = json::array();
      for (const auto& p : poses.frames) {
        json r = json::array();
        for (int i = 0; i < 3; ++i)
          for (int k = 0; k < 3; ++k) r.push_back(p.to_first.rotation()(i, k));
        const auto& t = p.to_first.translation();
        frames.push_back({{"t", p.frame_id},
                          {"rotation", r},
                          {"translation", {t.x(), t.y(), t.z()}},
                          {"flagged", p.flagged},
                          {"inliers", p.inliers}});
      }
      print({{"start_frame", span.start_frame}, {"end_frame", span.end_frame}, {"poses", frames}});
      return kOk;
    }

    if (*exp) {
      const rx::ExecutionResult result = rx::read_result(result_path);
      const fs::path dir = out_dir.empty() ? fs::path(result_path).parent_path() : fs::path(out_dir);
      for (const auto& p : rx::export_result(result, dir.empty() ? fs::path(".") : dir, parse_formats(formats)))
        std::cout << p.string() << '\n';
      return kOk;
    }

    if (*synth) {
      rx::SynthOptions opts;
      opts.seed = synth_seed;
      const auto scene = rx::write_synthetic_scene(synth_dir, opts);
      print({{"manifest", scene.manifest.string()},
             {"live", scene.live_manifest.string()},
             {"config", scene.config.string()},
             {"annotations", scene.annotations.string()},
             {"command", scene.command}});
      return kOk;
    }
  } catch (const rx::Error& e) {
    std::cerr << "rx: " << rx::to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "rx: " << e.what() << '\n';
    return kStage;
  }
  return kOk;
}
