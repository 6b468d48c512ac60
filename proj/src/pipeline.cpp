#include "rx/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>

#include "rx/image_io.hpp"
#include "rx/random.hpp"
#include "rx/stabilization.hpp"

namespace rx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Schema, where + ": " + what);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_asset(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

json to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Schema, "expected [x, y, z]");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json points_to_json(const std::vector<Point3>& points) {
  json out = json::array();
  for (const auto& p : points) out.push_back(to_json(p));
  return out;
}

std::vector<Point3> points_from_json(const json& j) {
  std::vector<Point3> out;
  for (const auto& p : j) out.push_back(point_from_json(p));
  return out;
}

json keypoints_to_json(const KeypointSet& k) { return {{"frame_id", k.frame_id}, {"points", points_to_json(k.points)}}; }

KeypointSet keypoints_from_json(const json& j) {
  return {points_from_json(j.at("points")), j.at("frame_id").get<int>()};
}

json hand_trajectory_to_json(const HandTrajectory& t) {
  json frames = json::array();
  for (const auto& f : t.frames) frames.push_back({{"t", f.frame_id}, {"joints", points_to_json(f.joints)}});
  return {{"clip_id", t.clip_id}, {"layout", to_string(t.layout)}, {"frames", frames}};
}

HandTrajectory hand_trajectory_from_json(const json& j) {
  HandTrajectory t;
  t.clip_id = j.at("clip_id").get<int>();
  t.layout = parse_layout(j.at("layout").get<std::string>());
  for (const auto& f : j.at("frames")) t.frames.push_back({f.at("t").get<int>(), points_from_json(f.at("joints"))});
  return t;
}

json span_to_json(const ClipSpan& s) {
  return {{"start_s", s.start_s}, {"end_s", s.end_s}, {"start_frame", s.start_frame}, {"end_frame", s.end_frame}};
}

ClipSpan span_from_json(const json& j) {
  return {j.at("start_s").get<double>(), j.at("end_s").get<double>(), j.at("start_frame").get<int>(),
          j.at("end_frame").get<int>()};
}

json transform_to_json(const RigidTransform& t) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(t.rotation()(i, k));
  return {{"rotation", r}, {"translation", to_json(t.translation())}};
}

RigidTransform transform_from_json(const json& j) {
  const auto& r = j.at("rotation");
  if (!r.is_array() || r.size() != 9) throw Error(ErrorKind::Schema, "rotation must have 9 entries");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = r.at(3 * i + k).get<double>();
  return {m, point_from_json(j.at("translation"))};
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

/// Runs fn(i) for every clip, possibly concurrently, and rethrows the failure of
/// the lowest failing index so the reported error does not depend on scheduling.
template <typename Fn>
void for_each_clip(int n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[static_cast<std::size_t>(i)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
    } catch (const Error& e) {
      throw Error(e.kind(), "clip " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

}  // namespace

Recording ingest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + manifest_path.string());
  const fs::path base = manifest_path.parent_path();
  const std::string where = "manifest " + manifest_path.string();

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    schema(where, e.what());
  }

  Recording rec;
  std::set<fs::path> hand_files;
  try {
    if (!doc.is_object()) schema(where, "top level must be an object");
    rec.id = doc.at("recording_id").get<std::string>();
    rec.fps = doc.at("fps").get<double>();
    if (!(rec.fps > 0.0) || !std::isfinite(rec.fps)) schema(where, "fps must be positive");
    rec.intrinsics = intrinsics_from_json(doc.at("intrinsics"));
    try {
      rec.intrinsics.validate();
    } catch (const Error& e) {
      schema(where, e.what());
    }
    rec.depth_scale = doc.value("depth_scale", 0.001);
    if (!(rec.depth_scale > 0.0)) schema(where, "depth_scale must be positive");
    const auto& frames = doc.at("frames");
    if (!frames.is_array() || frames.empty()) schema(where, "frames must be a non-empty array");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& f = frames[i];
      FrameAssets a;
      a.t = f.at("t").get<int>();
      if (a.t != static_cast<int>(i)) schema(where, "frame " + std::to_string(i) + " has t=" + std::to_string(a.t));
      a.rgb = resolve(base, f.at("rgb").get<std::string>());
      a.depth = resolve(base, f.at("depth").get<std::string>());
      a.descriptors = resolve(base, f.at("descriptors").get<std::string>());
      if (f.contains("hands") && !f["hands"].is_null()) a.hands = resolve(base, f["hands"].get<std::string>());
      if (f.contains("mask") && !f["mask"].is_null()) a.mask = resolve(base, f["mask"].get<std::string>());
      if (f.contains("tracks") && !f["tracks"].is_null()) a.tracks = resolve(base, f["tracks"].get<std::string>());
      rec.frames.push_back(std::move(a));
      rec.original_index.push_back(static_cast<int>(i));
    }
  } catch (const json::exception& e) {
    schema(where, e.what());
  }

  for (const auto& a : rec.frames) {
    for (const fs::path* p : {&a.rgb, &a.depth, &a.descriptors, &a.hands, &a.mask, &a.tracks})
      if (!p->empty()) require_asset(*p);
    read_descriptor_header(a.descriptors);
    if (!a.hands.empty()) hand_files.insert(a.hands);
  }
  for (const auto& path : hand_files) {
    const HandObservations file = read_hand_file(path);
    for (const auto& [frame, d] : file.detections()) {
      if (frame < 0 || frame >= rec.frame_count())
        schema(path.string(), "detection for frame " + std::to_string(frame) + " outside the recording");
      rec.hands.add(d);
    }
  }
  return rec;
}

LiveFrame load_live_frame(const fs::path& manifest_path) {
  const Recording rec = ingest(manifest_path);
  if (rec.frame_count() != 1)
    schema("live manifest " + manifest_path.string(), "expected exactly one frame");
  return {rec.frames[0].rgb, rec.intrinsics, load_depth(rec, 0), load_descriptors(rec, 0)};
}

DepthMap load_depth(const Recording& recording, int frame_index) {
  return read_depth_png(recording.frames.at(static_cast<std::size_t>(frame_index)).depth, recording.depth_scale);
}

DescriptorGrid load_descriptors(const Recording& recording, int frame_index) {
  return read_descriptor_file(recording.frames.at(static_cast<std::size_t>(frame_index)).descriptors,
                              recording.original_index.at(static_cast<std::size_t>(frame_index)));
}

double original_span_start(const Recording& view, const ClipSpan& span) {
  return view.to_original_time(span.start_s);
}

double original_span_end(const Recording& view, const ClipSpan& span) {
  // An end time closes the frame before it, which need not be adjacent to the next kept frame.
  const double pos = span.end_s * view.fps;
  const int last = std::clamp(static_cast<int>(std::ceil(pos - 1e-9)) - 1, 0, view.frame_count() - 1);
  return (view.original_index[static_cast<std::size_t>(last)] + (pos - last)) / view.fps;
}

Components make_components(const PipelineConfig& config) {
  Components c;
  if (config.vlm == "mock") {
    if (config.vlm_script.empty()) throw Error(ErrorKind::InvalidArgument, "config: vlm = mock needs vlm_script");
    c.vlm = std::make_unique<MockVlmClient>(MockVlmClient::from_file(config.vlm_script));
  } else {
    HttpClientConfig http;
    http.endpoint = config.vlm_endpoint;
    c.vlm = std::make_unique<HttpVlmClient>(HttpJsonClient(http));
  }
  if (config.backend == "baseline") {
    c.backend = std::make_unique<BaselineBackend>();
  } else {
    HttpClientConfig http;
    http.endpoint = config.llm_endpoint;
    http.api_key_env = "RX_LLM_API_KEY";
    c.backend = std::make_unique<HttpLlmBackend>(HttpJsonClient(http));
  }
  c.gripper = config.gripper_model.empty() ? GripperModel::robotiq_2f85() : read_gripper_model(config.gripper_model);
  return c;
}

ExecutionResult execute_command(const Recording& recording, const LiveFrame& live, const Command& command,
                                const PipelineConfig& config) {
  Components components = make_components(config);
  return execute_command(recording, live, command, config, components);
}

ExecutionResult execute_command(const Recording& recording, const LiveFrame& live, const Command& command,
                                const PipelineConfig& config, Components& components) {
  config.validate();
  ExecutionResult r;
  r.recording_id = recording.id;
  r.command = command.text;
  r.config = config;
  r.diagnostics.vlm = components.vlm->name();
  r.diagnostics.backend = components.backend->name();

  std::string stage;
  auto run = [&](const char* name, auto&& fn) {
    stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    r.diagnostics.timings_ms[name] = elapsed_ms(t0);
  };

  try {
    Recording view;
    run("presence", [&] {
      view = segment_by_presence(recording, recording.hands.timeline(recording.frame_count()), config.min_gap);
    });

    run("retrieval", [&] { r.spans = retrieve_clips(*components.vlm, view, command); });
    const int z = static_cast<int>(r.spans.size());

    std::vector<ClipResult> clips(static_cast<std::size_t>(z));
    for (int i = 0; i < z; ++i) {
      auto& c = clips[static_cast<std::size_t>(i)];
      c.span = r.spans[static_cast<std::size_t>(i)];
      c.original_start_s = original_span_start(view, c.span);
      c.original_end_s = original_span_end(view, c.span);
    }

    std::vector<DescriptorGrid> first_frames(static_cast<std::size_t>(z));
    DescriptorSet selected;
    run("descriptors", [&] {
      for_each_clip(z, [&](int i) {
        first_frames[static_cast<std::size_t>(i)] = load_descriptors(view, clips[static_cast<std::size_t>(i)].span.start_frame);
      });
      selected = select_common_descriptors(first_frames, config.k);
    });
    r.descriptor_patches = selected.source_patches;

    std::vector<KeypointSet> keypoints(static_cast<std::size_t>(z));
    run("keypoints", [&] {
      for_each_clip(z, [&](int i) {
        const int first = clips[static_cast<std::size_t>(i)].span.start_frame;
        const auto pixels = locate_keypoints(selected, first_frames[static_cast<std::size_t>(i)]);
        keypoints[static_cast<std::size_t>(i)] =
            lift_keypoints(pixels, load_depth(view, first), view.intrinsics, view.original_index[first]);
      });
    });
    for (int i = 0; i < z; ++i) clips[static_cast<std::size_t>(i)].keypoints = keypoints[static_cast<std::size_t>(i)];

    std::vector<FramePoses> poses(static_cast<std::size_t>(z));
    run("stabilization", [&] {
      for_each_clip(z, [&](int i) {
        const ClipSpan& span = clips[static_cast<std::size_t>(i)].span;
        std::vector<int> ids;
        std::vector<DepthMap> depths;
        for (int f = span.start_frame; f <= span.end_frame; ++f) {
          ids.push_back(view.original_index[static_cast<std::size_t>(f)]);
          depths.push_back(load_depth(view, f));
        }
        const fs::path& track_file = view.frames[static_cast<std::size_t>(span.start_frame)].tracks;
        if (track_file.empty()) {
          if (ids.size() > 1) throw Error(ErrorKind::MissingAsset, "first frame references no track file");
          poses[static_cast<std::size_t>(i)].frames.push_back({ids[0], RigidTransform::identity(), false, 0});
          return;
        }
        StabilizationParams params;
        params.ransac = {config.ransac_threshold, config.ransac_iterations};
        params.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
        poses[static_cast<std::size_t>(i)] =
            estimate_frame_poses(read_track_file(track_file), ids, depths, view.intrinsics, params);
      });
    });
    for (int i = 0; i < z; ++i) {
      auto& c = clips[static_cast<std::size_t>(i)];
      c.flagged_frames = poses[static_cast<std::size_t>(i)].flagged_frames();
      if (!c.flagged_frames.empty())
        r.diagnostics.warnings.push_back("clip " + std::to_string(i + 1) + ": " +
                                         std::to_string(c.flagged_frames.size()) +
                                         " frame(s) without pose consensus kept the previous pose");
    }

    std::vector<HandTrajectory> trajectories(static_cast<std::size_t>(z));
    run("hands", [&] {
      for_each_clip(z, [&](int i) {
        auto& c = clips[static_cast<std::size_t>(i)];
        c.frames.clear();
        c.skipped_frames.clear();
        for (int f = c.span.start_frame; f <= c.span.end_frame; ++f) {
          const int id = view.original_index[static_cast<std::size_t>(f)];
          (view.hands.find(id) ? c.frames : c.skipped_frames).push_back(id);
        }
        if (c.frames.empty()) throw Error(ErrorKind::MissingJoints, "no frame of the clip has a hand detection");
        trajectories[static_cast<std::size_t>(i)] =
            build_hand_trajectory(i, c.frames, view.hands, poses[static_cast<std::size_t>(i)]);
      });
    });
    for (int i = 0; i < z; ++i) {
      auto& c = clips[static_cast<std::size_t>(i)];
      c.trajectory = std::move(trajectories[static_cast<std::size_t>(i)]);
      if (!c.skipped_frames.empty())
        r.diagnostics.warnings.push_back("clip " + std::to_string(i + 1) + ": skipped " +
                                         std::to_string(c.skipped_frames.size()) + " frame(s) without hands");
    }
    r.clips = std::move(clips);

    run("live", [&] {
      const auto pixels = locate_keypoints(selected, live.descriptors);
      r.live_keypoints = lift_keypoints(pixels, live.depth, live.intrinsics, live.descriptors.frame_id());
    });

    run("heuristic", [&] { r.heuristic = select_heuristic(*components.vlm, command); });

    run("generation", [&] {
      std::vector<ContextExample> examples;
      for (const auto& c : r.clips) examples.push_back({c.keypoints, restrict_to_heuristic(c.trajectory, *r.heuristic)});
      GenerationConfig g;
      g.quantum = config.quantum;
      g.retries = config.retries;
      g.max_steps = config.max_steps;
      g.context_budget = config.context_budget;
      g.augment_copies = config.augment_copies;
      g.augment_translation = config.augment_translation;
      g.augment_rotation = config.augment_rotation;
      g.seed = config.seed;
      r.generated = generate_trajectory(*components.backend, examples, *r.live_keypoints, g);
      if (r.generated->fallback_used)
        r.diagnostics.warnings.push_back("backend output unusable; used the nearest-context warp");
    });

    run("retargeting", [&] { r.gripper = map_trajectory(r.generated->trajectory, *r.heuristic, components.gripper); });
  } catch (const Error& e) {
    r.diagnostics.failure = StageFailure{stage, e.kind(), e.what()};
  }
  return r;
}

json result_to_json(const ExecutionResult& r) {
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back(span_to_json(s));

  json clips = json::array();
  for (const auto& c : r.clips) {
    clips.push_back({{"span", span_to_json(c.span)},
                     {"original_start_s", c.original_start_s},
                     {"original_end_s", c.original_end_s},
                     {"frames", c.frames},
                     {"skipped_frames", c.skipped_frames},
                     {"flagged_frames", c.flagged_frames},
                     {"keypoints", keypoints_to_json(c.keypoints)},
                     {"trajectory", hand_trajectory_to_json(c.trajectory)}});
  }

  json generated = nullptr;
  if (r.generated) {
    generated = trajectory_to_json(*r.generated);
    generated["meta"]["attempts"] = r.generated->attempts;
    generated["meta"]["warnings"] = r.generated->warnings;
  }

  json gripper = nullptr;
  if (r.gripper) {
    json steps = json::array();
    for (int i = 0; i < r.gripper->size(); ++i) {
      const auto& p = r.gripper->poses[static_cast<std::size_t>(i)];
      json step = transform_to_json(p.pose);
      step["t"] = r.gripper->frame_ids[static_cast<std::size_t>(i)];
      step["opening_fraction"] = p.opening_fraction;
      step["closed"] = static_cast<bool>(r.gripper->closed[static_cast<std::size_t>(i)]);
      step["residual_rms"] = p.residual_rms;
      steps.push_back(std::move(step));
    }
    gripper = {{"heuristic", r.gripper->poses.empty() ? std::string(to_string(*r.heuristic))
                                                      : std::string(to_string(r.gripper->poses[0].heuristic))},
               {"steps", steps}};
  }

  json failure = nullptr;
  if (r.diagnostics.failure)
    failure = {{"stage", r.diagnostics.failure->stage},
               {"kind", to_string(r.diagnostics.failure->kind)},
               {"message", r.diagnostics.failure->message}};
  json diagnostics{{"vlm", r.diagnostics.vlm},
                   {"backend", r.diagnostics.backend},
                   {"warnings", r.diagnostics.warnings},
                   {"failure", failure}};
  if (r.config.export_timings) diagnostics["timings_ms"] = r.diagnostics.timings_ms;

  return {{"format", "rx-execution-result"},
          {"version", 1},
          {"recording_id", r.recording_id},
          {"command", r.command},
          {"config", r.config.to_json()},
          {"spans", spans},
          {"descriptor_patches", r.descriptor_patches},
          {"clips", clips},
          {"heuristic", r.heuristic ? json(to_string(*r.heuristic)) : json(nullptr)},
          {"live_keypoints", r.live_keypoints ? keypoints_to_json(*r.live_keypoints) : json(nullptr)},
          {"generated", generated},
          {"gripper", gripper},
          {"diagnostics", diagnostics}};
}

ExecutionResult result_from_json(const json& doc) {
  ExecutionResult r;
  try {
    if (doc.at("format") != "rx-execution-result" || doc.at("version") != 1)
      throw Error(ErrorKind::Schema, "not an rx execution result (version 1)");
    r.recording_id = doc.at("recording_id").get<std::string>();
    r.command = doc.at("command").get<std::string>();
    for (const auto& [key, value] : doc.at("config").items())
      r.config.set(key, value.is_string() ? value.get<std::string>() : value.dump());
    for (const auto& s : doc.at("spans")) r.spans.push_back(span_from_json(s));
    r.descriptor_patches = doc.at("descriptor_patches").get<std::vector<int>>();
    for (const auto& c : doc.at("clips")) {
      ClipResult clip;
      clip.span = span_from_json(c.at("span"));
      clip.original_start_s = c.at("original_start_s").get<double>();
      clip.original_end_s = c.at("original_end_s").get<double>();
      clip.frames = c.at("frames").get<std::vector<int>>();
      clip.skipped_frames = c.at("skipped_frames").get<std::vector<int>>();
      clip.flagged_frames = c.at("flagged_frames").get<std::vector<int>>();
      clip.keypoints = keypoints_from_json(c.at("keypoints"));
      clip.trajectory = hand_trajectory_from_json(c.at("trajectory"));
      r.clips.push_back(std::move(clip));
    }
    if (!doc.at("heuristic").is_null()) r.heuristic = parse_heuristic(doc["heuristic"].get<std::string>());
    if (!doc.at("live_keypoints").is_null()) r.live_keypoints = keypoints_from_json(doc["live_keypoints"]);
    if (!doc.at("generated").is_null()) {
      const auto& g = doc["generated"];
      r.generated = trajectory_from_json(g);
      r.generated->attempts = g.at("meta").at("attempts").get<int>();
      r.generated->warnings = g.at("meta").at("warnings").get<std::vector<std::string>>();
    }
    if (!doc.at("gripper").is_null()) {
      const auto& g = doc["gripper"];
      const HeuristicKind kind = parse_heuristic(g.at("heuristic").get<std::string>());
      GripperTrajectory traj;
      for (const auto& s : g.at("steps")) {
        GripperPose p;
        p.pose = transform_from_json(s);
        p.opening_fraction = s.at("opening_fraction").get<double>();
        p.residual_rms = s.at("residual_rms").get<double>();
        p.heuristic = kind;
        traj.poses.push_back(p);
        traj.frame_ids.push_back(s.at("t").get<int>());
        traj.closed.push_back(s.at("closed").get<bool>());
      }
      r.gripper = std::move(traj);
    }
    const auto& d = doc.at("diagnostics");
    r.diagnostics.vlm = d.at("vlm").get<std::string>();
    r.diagnostics.backend = d.at("backend").get<std::string>();
    r.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
    if (d.contains("timings_ms")) r.diagnostics.timings_ms = d["timings_ms"].get<std::map<std::string, double>>();
    if (!d.at("failure").is_null()) {
      const auto& f = d["failure"];
      r.diagnostics.failure = StageFailure{f.at("stage").get<std::string>(),
                                           parse_error_kind(f.at("kind").get<std::string>()),
                                           f.at("message").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("execution result: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, std::string("execution result: ") + e.what());
  }
  return r;
}

ExecutionResult read_result(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  try {
    return result_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
}

ExportFormat parse_export_format(std::string_view text) {
  if (text == "json") return ExportFormat::Json;
  if (text == "ply") return ExportFormat::Ply;
  if (text == "svg") return ExportFormat::Svg;
  throw Error(ErrorKind::InvalidArgument, "unknown export format '" + std::string(text) + "'");
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

namespace {

struct Rgb {
  int r, g, b;
};

/// Red at the first step, blue at the last.
Rgb time_color(std::size_t i, std::size_t n) {
  const double s = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  return {static_cast<int>(std::lround(255.0 * (1.0 - s))), 0, static_cast<int>(std::lround(255.0 * s))};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<Point3> gripper_positions(const ExecutionResult& r) {
  std::vector<Point3> out;
  if (r.gripper)
    for (const auto& p : r.gripper->poses) out.push_back(p.pose.translation());
  return out;
}

std::string to_ply(const ExecutionResult& r) {
  const std::vector<Point3> keypoints = r.live_keypoints ? r.live_keypoints->points : std::vector<Point3>{};
  const std::vector<Point3> path = gripper_positions(r);
  const std::size_t edges = path.size() > 1 ? path.size() - 1 : 0;
  std::string out = "ply\nformat ascii 1.0\ncomment rx execution result: live keypoints then gripper path\n";
  out += "element vertex " + std::to_string(keypoints.size() + path.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "element edge " + std::to_string(edges) + "\nproperty int vertex1\nproperty int vertex2\nend_header\n";
  auto vertex = [&](const Point3& p, Rgb c) {
    out += fmt("%.9g", p.x()) + " " + fmt("%.9g", p.y()) + " " + fmt("%.9g", p.z()) + " " + std::to_string(c.r) +
           " " + std::to_string(c.g) + " " + std::to_string(c.b) + "\n";
  };
  for (const auto& p : keypoints) vertex(p, {0, 200, 0});
  for (std::size_t i = 0; i < path.size(); ++i) vertex(path[i], time_color(i, path.size()));
  for (std::size_t i = 0; i < edges; ++i) {
    const std::size_t a = keypoints.size() + i;
    out += std::to_string(a) + " " + std::to_string(a + 1) + "\n";
  }
  return out;
}

std::string to_svg(const ExecutionResult& r) {
  const std::vector<Point3> keypoints = r.live_keypoints ? r.live_keypoints->points : std::vector<Point3>{};
  const std::vector<Point3> path = gripper_positions(r);
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool any = false;
  for (const auto* set : {&keypoints, &path}) {
    for (const auto& p : *set) {
      if (!any) {
        x0 = x1 = p.x();
        y0 = y1 = p.y();
        any = true;
      }
      x0 = std::min(x0, p.x());
      x1 = std::max(x1, p.x());
      y0 = std::min(y0, p.y());
      y1 = std::max(y1, p.y());
    }
  }
  constexpr double size = 800.0, margin = 40.0;
  const double extent = std::max({x1 - x0, y1 - y0, 1e-6});
  const double scale = (size - 2 * margin) / extent;
  auto sx = [&](double x) { return fmt("%.3f", margin + (x - x0) * scale); };
  auto sy = [&](double y) { return fmt("%.3f", margin + (y - y0) * scale); };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
  out += "<title>" + r.command + " (top-down x-y)</title>\n";
  out += "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  for (const auto& p : keypoints)
    out += "<rect x=\"" + fmt("%.3f", margin + (p.x() - x0) * scale - 4) + "\" y=\"" +
           fmt("%.3f", margin + (p.y() - y0) * scale - 4) + "\" width=\"8\" height=\"8\" fill=\"#2a2\"/>\n";
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Rgb c = time_color(i, path.size());
    out += "<line x1=\"" + sx(path[i].x()) + "\" y1=\"" + sy(path[i].y()) + "\" x2=\"" + sx(path[i + 1].x()) +
           "\" y2=\"" + sy(path[i + 1].y()) + "\" stroke=\"rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) +
           "," + std::to_string(c.b) + ")\" stroke-width=\"3\"/>\n";
  }
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Rgb c = time_color(i, path.size());
    out += "<circle cx=\"" + sx(path[i].x()) + "\" cy=\"" + sy(path[i].y()) + "\" r=\"5\" fill=\"rgb(" +
           std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + ")\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace

std::vector<fs::path> export_result(const ExecutionResult& result, const fs::path& out_dir,
                                    const std::vector<ExportFormat>& formats) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw Error(ErrorKind::Io, "cannot create output directory " + out_dir.string());
  std::vector<ExportFormat> unique;
  for (auto f : formats)
    if (std::find(unique.begin(), unique.end(), f) == unique.end()) unique.push_back(f);

  std::vector<fs::path> written;
  for (auto f : unique) {
    switch (f) {
      case ExportFormat::Json:
        written.push_back(out_dir / "result.json");
        write_text(written.back(), dump_json(result_to_json(result)));
        break;
      case ExportFormat::Ply:
        written.push_back(out_dir / "result.ply");
        write_text(written.back(), to_ply(result));
        break;
      case ExportFormat::Svg:
        written.push_back(out_dir / "result.svg");
        write_text(written.back(), to_svg(result));
        break;
    }
  }
  return written;
}

}  // namespace rx
