#include "rx/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "rx/descriptors.hpp"
#include "rx/error.hpp"
#include "rx/hands.hpp"
#include "rx/image_io.hpp"
#include "rx/random.hpp"
#include "rx/stabilization.hpp"

namespace rx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kWidth = 320;
constexpr int kHeight = 240;
constexpr int kPatch = 16;
constexpr int kCols = kWidth / kPatch;
constexpr int kRows = kHeight / kPatch;
constexpr double kFocal = 400.0;
constexpr double kTable = 1.0;        // table depth, meters
constexpr double kStep = 0.01;        // camera slide per frame, meters
constexpr double kFps = 10.0;
constexpr int kLeadIn = 2;            // hand-free frames before, between and after the clips
constexpr double kLiveDepth = 1.2;
constexpr double kLiveFocal = kFocal * kLiveDepth / kTable;

CameraIntrinsics camera(double focal) {
  return {focal, focal, kWidth / 2.0, kHeight / 2.0, kWidth, kHeight};
}

int patch_center(int index) { return index * kPatch + kPatch / 2; }

Point3 table_point(int col, int row) {
  return unproject({static_cast<double>(patch_center(col)), static_cast<double>(patch_center(row))}, kTable,
                   camera(kFocal));
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string frame_name(const char* prefix, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d.%s", prefix, t, ext);
  return buf;
}

RowMatrix noise_descriptors(Rng& rng, int dim) {
  RowMatrix d(kRows * kCols, dim);
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < dim; ++j) d(i, j) = static_cast<float>(rng.normal());
  return d;
}

/// Distinct patches with a non-collinear layout, columns in [c0, c1] and rows in [r0, r1].
std::vector<std::pair<int, int>> pick_patches(Rng& rng, int k, int c0, int c1, int r0, int r1) {
  while (true) {
    std::set<std::pair<int, int>> used;
    std::vector<std::pair<int, int>> out;
    while (static_cast<int>(out.size()) < k) {
      const int c = c0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c1 - c0 + 1)));
      const int r = r0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(r1 - r0 + 1)));
      if (used.insert({c, r}).second) out.push_back({c, r});
    }
    std::vector<Point3> pts;
    for (auto [c, r] : out) pts.push_back(table_point(c, r));
    if (affine_rank(pts) >= 2) return out;
  }
}

/// Hand joints consistent with a gripper pose: the fingertips sit where the jaws
/// would be at the given opening and the index-mcp/thumb-ip midpoint at the palm.
HandJointFrame hand_from_gripper(const RigidTransform& pose, double opening, int frame_id) {
  const double b = 0.5 * opening * 0.085;
  const double h = 0.06;
  HandJointFrame f;
  f.frame_id = frame_id;
  auto set = [&](Joint j, double x, double y, double z) { f[j] = pose.apply(Point3(x, y, z)); };
  set(Joint::Wrist, 0.0, 0.0, -0.07);
  set(Joint::ThumbCmc, -0.012, -0.03, -0.045);
  set(Joint::ThumbMcp, -0.012, -0.034, -0.02);
  set(Joint::ThumbIp, -0.012, -0.02, 0.0);
  set(Joint::ThumbTip, 0.0, -b, h);
  set(Joint::IndexMcp, 0.012, 0.02, 0.0);
  set(Joint::IndexPip, 0.008, 0.02 + 0.4 * (b - 0.02), 0.025);
  set(Joint::IndexDip, 0.004, 0.02 + 0.7 * (b - 0.02), 0.045);
  set(Joint::IndexTip, 0.0, b, h);
  for (int finger = 0; finger < 3; ++finger) {
    const double x = 0.03 + 0.015 * finger;
    const int base = static_cast<int>(Joint::MiddleMcp) + 4 * finger;
    f.joints[static_cast<std::size_t>(base + 0)] = pose.apply(Point3(x, 0.015, -0.005));
    f.joints[static_cast<std::size_t>(base + 1)] = pose.apply(Point3(x, 0.02, 0.02));
    f.joints[static_cast<std::size_t>(base + 2)] = pose.apply(Point3(x, 0.018, 0.035));
    f.joints[static_cast<std::size_t>(base + 3)] = pose.apply(Point3(x, 0.012, 0.045));
  }
  return f;
}

Eigen::Matrix3d rot(const Point3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace

std::vector<RigidTransform> SynthScene::expected_live_poses() const {
  std::vector<RigidTransform> out;
  for (const auto& p : clip_poses.at(0)) out.push_back(live_transform * p);
  return out;
}

SynthScene write_synthetic_scene(const fs::path& dir, const SynthOptions& options) {
  if (options.k < 3 || options.k > 40) throw Error(ErrorKind::InvalidArgument, "synth: k must be in [3, 40]");
  if (options.clip_length < 2 || options.clip_length > 25)
    throw Error(ErrorKind::InvalidArgument, "synth: clip_length must be in [2, 25]");
  if (options.descriptor_dim < 4) throw Error(ErrorKind::InvalidArgument, "synth: descriptor_dim must be >= 4");
  if (options.dynamic_tracks < 0 || options.dynamic_tracks > 30)
    throw Error(ErrorKind::InvalidArgument, "synth: dynamic_tracks must be in [0, 30]");

  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());

  Rng rng(options.seed);
  SynthScene scene;
  scene.command = "pick up the mug";

  const int L = options.clip_length;
  const int clip_first[2] = {kLeadIn, 2 * kLeadIn + L};
  const int frame_count = 3 * kLeadIn + 2 * L;

  // The live camera sees the table 20 cm further away, rotated a quarter turn about
  // the optical axis. Its focal length is scaled so that patch centers stay on the
  // patch grid: a clip patch (col, row) appears at live patch (17 - row, col - 2).
  Eigen::Matrix3d quarter;
  quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  scene.live_transform = RigidTransform(quarter, Point3(0.02, 0.02, kLiveDepth - kTable));

  RowMatrix planted(options.k, options.descriptor_dim);
  for (int i = 0; i < options.k; ++i)
    for (int j = 0; j < options.descriptor_dim; ++j) planted(i, j) = static_cast<float>(rng.normal());

  auto clip1_patches = pick_patches(rng, options.k, 4, 15, 2, 12);
  auto clip2_patches = pick_patches(rng, options.k, 2, 17, 1, 13);
  // Planted descriptors tie on votes and similarity, so selection ranks them by
  // patch index in the first clip. List them in that order.
  std::vector<int> perm(static_cast<std::size_t>(options.k));
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    const auto [ca, ra] = clip1_patches[static_cast<std::size_t>(a)];
    const auto [cb, rb] = clip1_patches[static_cast<std::size_t>(b)];
    return ra * kCols + ca < rb * kCols + cb;
  });
  {
    auto p1 = clip1_patches, p2 = clip2_patches;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      clip1_patches[i] = p1[static_cast<std::size_t>(perm[i])];
      clip2_patches[i] = p2[static_cast<std::size_t>(perm[i])];
    }
  }
  const std::vector<std::pair<int, int>>* patches[2] = {&clip1_patches, &clip2_patches};

  HandObservations hands;
  std::vector<json> frames_json;
  const CameraIntrinsics cam = camera(kFocal);

  GrayImage rgb{kWidth, kHeight, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(kWidth) * kHeight)};
  for (int v = 0; v < kHeight; ++v)
    for (int u = 0; u < kWidth; ++u) rgb.pixels[static_cast<std::size_t>(v) * kWidth + u] = static_cast<std::uint16_t>((u + v) % 256);
  write_png_gray(dir / "frames" / "rgb.png", rgb);
  write_depth_png(dir / "frames" / "table_depth.png", DepthMap(kWidth, kHeight, kTable));

  // Camera offset (clip-local frame index) and clip id of every recording frame.
  std::vector<int> clip_of(static_cast<std::size_t>(frame_count), -1), local(static_cast<std::size_t>(frame_count), 0);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < L; ++i) {
      clip_of[static_cast<std::size_t>(clip_first[c] + i)] = c;
      local[static_cast<std::size_t>(clip_first[c] + i)] = i;
    }

  for (int c = 0; c < 2; ++c) {
    std::vector<Point3> kp;
    for (auto [col, row] : *patches[c]) kp.push_back(table_point(col, row));
    scene.clip_keypoints.push_back(kp);
    Point3 centroid = Point3::Zero();
    for (const auto& p : kp) centroid += p;
    centroid /= static_cast<double>(kp.size());

    const double yaw0 = rng.uniform(-0.6, 0.6);
    const double tilt = rng.uniform(-0.15, 0.15);
    const Point3 drift(rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03), 0.0);
    std::vector<RigidTransform> poses;
    std::vector<double> openings;
    for (int i = 0; i < L; ++i) {
      const double s = static_cast<double>(i) / (L - 1);
      const Eigen::Matrix3d R = rot({0, 0, 1}, yaw0 + 0.3 * s) * rot({1, 0, 0}, tilt * (1 - s));
      const Point3 p = centroid + drift * (1 - s) + Point3(0, 0, -0.25 + 0.17 * s);
      poses.emplace_back(R, p);
      openings.push_back(s < 0.6 ? 0.9 : (s < 0.7 ? 0.6 : 0.3));
    }
    scene.clip_poses.push_back(poses);
    scene.clip_openings.push_back(openings);
    scene.clip_spans.push_back({clip_first[c] / kFps, (clip_first[c] + L) / kFps});

    // Tracks: static table points plus points riding along with the hand.
    TrackSet tracks;
    const int statics = 30;
    std::set<std::pair<int, int>> used;
    for (int n = 0; n < statics + options.dynamic_tracks; ++n) {
      const bool dynamic = n >= statics;
      int u0, v0;
      do {
        u0 = 4 * L + 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(kWidth - 4 * L - 8)));
        v0 = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dynamic ? kHeight - 8 * L - 8 : kHeight - 8)));
      } while (!used.insert({u0, v0}).second);
      Track tr{n, {}};
      for (int i = 0; i < L; ++i) {
        const double u = u0 - 4.0 * i;  // kStep * kFocal / kTable pixels per frame
        const double v = dynamic ? v0 + 8.0 * i : v0;
        tr.observations.push_back({clip_first[c] + i, {u, v}, true});
      }
      tracks.tracks.push_back(std::move(tr));
    }
    write_track_file(dir / "frames" / ("tracks_clip" + std::to_string(c + 1) + ".json"), tracks);
  }

  for (int t = 0; t < frame_count; ++t) {
    const int c = clip_of[static_cast<std::size_t>(t)];
    RowMatrix desc = noise_descriptors(rng, options.descriptor_dim);
    if (c >= 0 && local[static_cast<std::size_t>(t)] == 0) {
      for (int i = 0; i < options.k; ++i) {
        const auto [col, row] = (*patches[c])[static_cast<std::size_t>(i)];
        desc.row(row * kCols + col) = planted.row(i);
      }
    }
    const std::string desc_name = frame_name("desc", t, "rxdg");
    write_descriptor_file(dir / "frames" / desc_name, DescriptorGrid(t, kRows, kCols, {kPatch, 0, 0}, desc));

    HandObservations::Detection d;
    d.frame = t;
    d.present = c >= 0;
    d.confidence = d.present ? 0.95 : 0.0;
    if (d.present) {
      const int i = local[static_cast<std::size_t>(t)];
      // Camera coordinates of frame i are clip frame-1 coordinates shifted by the slide.
      const RigidTransform to_camera = RigidTransform::translation_only(Point3(-kStep * i, 0, 0));
      d.joints = hand_from_gripper(to_camera * scene.clip_poses[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)],
                                   scene.clip_openings[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)], t);
    }
    hands.add(d);

    json f{{"t", t},
           {"rgb", "frames/rgb.png"},
           {"depth", "frames/table_depth.png"},
           {"descriptors", "frames/" + desc_name},
           {"hands", "frames/hands.json"}};
    if (c >= 0) f["tracks"] = "frames/tracks_clip" + std::to_string(c + 1) + ".json";
    frames_json.push_back(f);
  }
  write_hand_file(dir / "frames" / "hands.json", hands);

  const json intrinsics{{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy}, {"width", cam.width}, {"height", cam.height}};
  scene.manifest = dir / "recording.json";
  write_json(scene.manifest, {{"recording_id", "synthetic-desk"},
                              {"fps", kFps},
                              {"depth_scale", 0.001},
                              {"intrinsics", intrinsics},
                              {"frames", frames_json}});

  // Live frame.
  RowMatrix live_desc = noise_descriptors(rng, options.descriptor_dim);
  const CameraIntrinsics live_cam = camera(kLiveFocal);
  for (int i = 0; i < options.k; ++i) {
    const auto [col, row] = clip1_patches[static_cast<std::size_t>(i)];
    const int lc = 17 - row, lr = col - 2;
    live_desc.row(lr * kCols + lc) = planted.row(i);
    scene.live_keypoints.push_back(scene.live_transform.apply(table_point(col, row)));
  }
  write_descriptor_file(dir / "frames" / "live_desc.rxdg", DescriptorGrid(0, kRows, kCols, {kPatch, 0, 0}, live_desc));
  write_depth_png(dir / "frames" / "live_depth.png", DepthMap(kWidth, kHeight, kLiveDepth));
  scene.live_manifest = dir / "live.json";
  write_json(scene.live_manifest,
             {{"recording_id", "synthetic-desk-live"},
              {"fps", kFps},
              {"depth_scale", 0.001},
              {"intrinsics",
               {{"fx", live_cam.fx}, {"fy", live_cam.fy}, {"cx", live_cam.cx}, {"cy", live_cam.cy}, {"width", kWidth}, {"height", kHeight}}},
              {"frames", json::array({{{"t", 0}, {"rgb", "frames/rgb.png"}, {"depth", "frames/live_depth.png"}, {"descriptors", "frames/live_desc.rxdg"}}})}});

  // Hand-free frames are dropped before retrieval, so the mock answers in the
  // filtered timeline where the clips are back to back.
  scene.vlm_script = dir / "mock_vlm.json";
  write_json(scene.vlm_script,
             {{scene.command, {{"spans", {{0.0, L / kFps}, {L / kFps, 2 * L / kFps}}}, {"heuristic", "grasp"}}}});

  scene.annotations = dir / "annotations.json";
  json gt = json::array();
  for (auto [s, e] : scene.clip_spans) gt.push_back({s, e});
  write_json(scene.annotations, {{scene.command, gt}});

  scene.config = dir / "pipeline.toml";
  std::ofstream cfg(scene.config);
  cfg << "# synthetic desk scene\n"
      << "k = " << options.k << "\n"
      << "quantum = 1e-06\n"
      << "vlm = \"mock\"\n"
      << "vlm_script = \"mock_vlm.json\"\n"
      << "backend = \"baseline\"\n"
      << "seed = " << options.seed << "\n";
  if (!cfg) throw Error(ErrorKind::Io, "cannot write " + scene.config.string());
  return scene;
}

}  // namespace rx
