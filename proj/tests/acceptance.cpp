// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rx/context.hpp"
#include "rx/error.hpp"
#include "rx/pipeline.hpp"
#include "rx/retrieval.hpp"
#include "rx/synth.hpp"
#include "scenes.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures so a criterion reports the first violated check with context.
class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
  }
  Outcome outcome(const std::string& summary) const { return {pass_, pass_ ? summary : first_failure_ + " (" + summary + ")"}; }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome kabsch_suite() {
  rx::Rng rng(1001);
  struct Instance {
    oracle::Rigid g;
    std::vector<rx::Point3> src, dst;
  };
  std::vector<Instance> instances;
  for (int i = 0; i < 200; ++i) {
    Instance in{scenes::random_rigid(rng, 5.0), {}, {}};
    const int n = 4 + static_cast<int>(rng.below(47));
    in.src = oracle::random_cloud(rng, n, 1.0);
    for (const auto& p : in.src) in.dst.push_back(in.g.R * p + in.g.t);
    instances.push_back(std::move(in));
  }
  Checker c;
  double worst_r = 0, worst_t = 0;
  const auto t0 = Clock::now();
  for (const auto& in : instances) {
    const auto fit = rx::estimate_rigid_transform(in.src, in.dst);
    worst_r = std::max(worst_r, oracle::angle_between(fit.rotation(), in.g.R));
    worst_t = std::max(worst_t, (fit.translation() - in.g.t).norm());
    c.require(fit.rotation().determinant() > 0.0, "reflection emitted");
  }
  const double elapsed = seconds_since(t0);
  c.require(worst_r < 1e-9, "rotation error " + fmt(worst_r) + " rad");
  c.require(worst_t < 1e-9, "translation error " + fmt(worst_t) + " m");
  c.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome("200 instances, max rot " + fmt(worst_r) + " rad, max trans " + fmt(worst_t) + " m, " + fmt(elapsed) + " s");
}

Outcome robust_suite() {
  rx::Rng rng(1002);
  Checker c;
  int exact_masks = 0;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = scenes::random_rigid(rng, 1.0);
    const int n = 20 + static_cast<int>(rng.below(41));
    const double fraction = rng.uniform(0.2, 0.3);
    const auto src = oracle::random_cloud(rng, n, 1.0);
    std::vector<rx::Point3> dst;
    std::vector<bool> truth(static_cast<std::size_t>(n), true);
    for (int j = 0; j < n; ++j) dst.push_back(g.R * src[static_cast<std::size_t>(j)] + g.t);
    const int outliers = static_cast<int>(std::lround(fraction * n));
    int planted = 0;
    while (planted < outliers) {
      const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
      if (!truth[j]) continue;
      truth[j] = false;
      dst[j] += oracle::random_vector(rng, 1.0).normalized() * rng.uniform(0.05, 0.5);
      ++planted;
    }
    try {
      const auto fit = rx::robust_rigid_transform(src, dst, {0.01, 500}, 5000 + static_cast<std::uint64_t>(i));
      const double err = std::max(oracle::angle_between(fit.transform.rotation(), g.R), (fit.transform.translation() - g.t).norm());
      worst = std::max(worst, err);
      c.require(err < 1e-6, "instance " + std::to_string(i) + " error " + fmt(err));
      exact_masks += fit.inlier_mask == truth;
    } catch (const rx::Error& e) {
      c.require(false, "instance " + std::to_string(i) + ": " + e.what());
    }
  }
  c.require(exact_masks >= 99, "exact masks " + std::to_string(exact_masks) + "/100");
  return c.outcome("100 instances, max error " + fmt(worst) + ", exact masks " + std::to_string(exact_masks) + "/100");
}

Outcome projection_suite() {
  const rx::CameraIntrinsics cam{525.0, 525.0, 319.5, 239.5, 640, 480};
  double worst = 0;
  for (double d : {0.3, 1.7, 9.5})
    for (int v = 0; v < 480; ++v)
      for (int u = 0; u < 640; ++u) {
        const auto p = rx::project(rx::unproject({double(u), double(v)}, d, cam), cam);
        worst = std::max({worst, std::abs(p.u - u), std::abs(p.v - v)});
      }
  Checker c;
  c.require(worst < 1e-6, "max pixel error " + fmt(worst));
  return c.outcome("921600 pixels, max error " + fmt(worst) + " px");
}

std::vector<std::vector<std::vector<double>>> as_vectors(const std::vector<rx::DescriptorGrid>& grids) {
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& g : grids) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < g.patch_count(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(g.descriptor_dim()));
      for (int j = 0; j < g.descriptor_dim(); ++j) r[static_cast<std::size_t>(j)] = g.data()(i, j);
      rows.push_back(std::move(r));
    }
    out.push_back(std::move(rows));
  }
  return out;
}

Outcome descriptor_suite() {
  rx::Rng rng(1004);
  Checker c;
  int recovered = 0;
  const int zs[3] = {2, 5, 10};
  for (int i = 0; i < 50; ++i) {
    const int z = zs[i % 3];
    const int k = 10;
    const auto planted = scenes::planted_descriptors(rng, z, 12, 16, 64, k);
    const auto set = rx::select_common_descriptors(planted.grids, k);
    auto got = set.source_patches;
    auto want = planted.planted_patches;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    const bool ok = got == want;
    recovered += ok;
    c.require(ok, "instance " + std::to_string(i) + " (Z=" + std::to_string(z) + ") missed planted descriptors");
    c.require(set.source_patches == oracle::top_k(oracle::mnn_commonality(as_vectors(planted.grids)), k),
              "instance " + std::to_string(i) + " disagrees with the mutual-NN oracle");
  }
  return c.outcome(std::to_string(recovered) + "/50 instances recovered, oracle agreement checked");
}

Outcome stabilization_suite() {
  rx::Rng rng(1005);
  Checker c;
  double worst_pose = 0, worst_world = 0;
  for (int r = 0; r < 10; ++r) {
    const auto rig = scenes::moving_camera_rig(rng, 8, 28, 12);
    rx::StabilizationParams params;
    params.seed = 40 + static_cast<std::uint64_t>(r);
    const auto poses = rx::estimate_frame_poses(rig.tracks, rig.frame_ids, rig.depths, rig.intrinsics, params);
    c.require(poses.frames[0].to_first.is_identity(), "first pose is not the identity");
    for (std::size_t t = 0; t < rig.frame_ids.size(); ++t) {
      const auto& est = poses.frames[t].to_first;
      worst_pose = std::max({worst_pose, oracle::angle_between(est.rotation(), rig.to_first[t].rotation()),
                             (est.translation() - rig.to_first[t].translation()).norm()});
    }
    const auto& K = rig.intrinsics;
    std::size_t s = 0;
    for (std::size_t i = 0; i < rig.tracks.tracks.size(); ++i) {
      if (!rig.is_static[i]) continue;
      for (std::size_t t = 0; t < rig.frame_ids.size(); ++t) {
        const auto px = *rig.tracks.tracks[i].at(rig.frame_ids[t]);
        const double d = rig.depths[t].at(static_cast<int>(std::lround(px.u)), static_cast<int>(std::lround(px.v)));
        const std::vector<rx::Point3> cam{{(px.u - K.cx) * d / K.fx, (px.v - K.cy) * d / K.fy, d}};
        worst_world = std::max(worst_world, (rx::reexpress_in_frame1(poses, rig.frame_ids[t], cam)[0] - rig.static_world[s]).norm());
      }
      ++s;
    }
  }
  c.require(worst_pose < 1e-6, "pose error " + fmt(worst_pose));
  c.require(worst_world < 1e-6, "world-point drift " + fmt(worst_world));
  return c.outcome("10 rigs x 8 frames, 30% dynamic, max pose error " + fmt(worst_pose) + ", max world drift " + fmt(worst_world));
}

double pose_error(const rx::RigidTransform& a, const rx::RigidTransform& b) {
  return std::max(oracle::angle_between(a.rotation(), b.rotation()), (a.translation() - b.translation()).norm());
}

rx::HandJointFrame moved(const rx::HandJointFrame& f, const rx::RigidTransform& g) {
  rx::HandJointFrame out = f;
  for (auto& j : out.joints) j = g.apply(j);
  return out;
}

Outcome gripper_suite() {
  const auto model = rx::GripperModel::robotiq_2f85();
  rx::Rng rng(1006);
  Checker c;
  double worst_fit = 0, worst_resid = 0, worst_equi = 0;

  const rx::Point3 span = model.contact_base - model.contact_tip;
  const std::vector<rx::Point3> line{model.contact_tip, model.contact_tip + span / 3.0, model.contact_tip + 2.0 * span / 3.0,
                                     model.contact_base};
  for (int i = 0; i < 100; ++i) {
    const auto g = scenes::to_rx(scenes::random_rigid(rng, 0.5));
    worst_fit = std::max(worst_fit, pose_error(rx::grasp_pose(scenes::grasp_hand(g, 0.085, model), model).pose, g));
    // A bent finger pins the roll; the fit lands half the bend off the contact line.
    const double b = rng.uniform(0.002, 0.01);
    const auto bent = g * rx::RigidTransform(Eigen::Matrix3d::Identity(), rx::Point3(-0.5 * b, 0, 0));
    worst_fit = std::max(worst_fit, pose_error(rx::press_pose(scenes::press_hand(g, b, model), model).pose, bent));
    worst_fit = std::max(worst_fit, pose_error(rx::push_pose(scenes::push_hand(g, b, model), model).pose, bent));
    // A straight finger leaves roll about the line free, so compare the contact points.
    for (const auto& fit : {rx::press_pose(scenes::press_hand(g, 0.0, model), model).pose,
                            rx::push_pose(scenes::push_hand(g, 0.0, model), model).pose})
      for (const auto& p : line) worst_fit = std::max(worst_fit, (fit.apply(p) - g.apply(p)).norm());

    // Residuals on perturbed hands against the independent quaternion minimizer.
    auto grasp = scenes::grasp_hand(g, rng.uniform(0.01, 0.08), model);
    auto press = scenes::press_hand(g, rng.uniform(0.0, 0.01), model);
    for (auto* f : {&grasp, &press})
      for (auto& j : f->joints) j += oracle::random_vector(rng, 0.003);
    const std::vector<rx::Point3> gsrc{model.left_tip, model.right_tip, model.palm_base};
    const std::vector<rx::Point3> gdst{grasp.index_tip(), grasp.thumb_tip(), 0.5 * (grasp.index_mcp() + grasp.thumb_dip())};
    worst_resid = std::max(worst_resid, std::abs(rx::grasp_pose(grasp, model).residual_rms - oracle::rms(oracle::horn_fit(gsrc, gdst), gsrc, gdst)));
    const std::vector<rx::Point3> pdst{press.index_tip(), press.index_dip(), press.index_pip(), press.index_mcp()};
    worst_resid = std::max(worst_resid, std::abs(rx::press_pose(press, model).residual_rms - oracle::rms(oracle::horn_fit(line, pdst), line, pdst)));

    // Equivariance.
    const auto h = scenes::to_rx(scenes::random_rigid(rng, 1.0));
    auto push = scenes::push_hand(g, rng.uniform(0.001, 0.01), model);
    for (auto& j : push.joints) j += oracle::random_vector(rng, 0.002);
    worst_equi = std::max(worst_equi, pose_error(rx::grasp_pose(moved(grasp, h), model).pose, h * rx::grasp_pose(grasp, model).pose));
    worst_equi = std::max(worst_equi, pose_error(rx::press_pose(moved(press, h), model).pose, h * rx::press_pose(press, model).pose));
    worst_equi = std::max(worst_equi, pose_error(rx::push_pose(moved(push, h), model).pose, h * rx::push_pose(push, model).pose));
  }
  c.require(worst_fit < 1e-9, "pose recovery error " + fmt(worst_fit));
  c.require(worst_resid < 1e-9, "residual differs from the minimum by " + fmt(worst_resid));
  c.require(worst_equi < 1e-9, "equivariance error " + fmt(worst_equi));

  const rx::RigidTransform id;
  c.require(rx::opening_fraction(0.0, model.stroke) == 0.0, "opening fraction at 0");
  c.require(rx::grasp_pose(scenes::grasp_hand(id, model.stroke, model), model).opening_fraction == 1.0, "opening fraction at stroke");
  c.require(rx::grasp_pose(scenes::grasp_hand(id, 0.1, model), model).opening_fraction == 1.0, "opening fraction beyond stroke");
  return c.outcome("recovery " + fmt(worst_fit) + ", residual gap " + fmt(worst_resid) + ", equivariance " + fmt(worst_equi) +
                   ", boundaries exact");
}

rx::ContextExample random_example(rx::Rng& rng, int k, int steps, rx::JointLayout layout) {
  rx::ContextExample e;
  e.keypoints.points = oracle::random_cloud(rng, k, 0.3);
  e.trajectory.layout = layout;
  for (int t = 0; t < steps; ++t) {
    rx::JointFrame f{t, {}};
    for (int j = 0; j < rx::joint_count(layout); ++j) f.joints.push_back(oracle::random_vector(rng, 0.4));
    e.trajectory.frames.push_back(std::move(f));
  }
  return e;
}

class GarbageBackend : public rx::SequenceBackend {
 public:
  std::string complete(const rx::SerializedPrompt&) override { return "Here is the trajectory you asked for!"; }
  bool deterministic() const override { return true; }
  std::string name() const override { return "garbage"; }
};

Outcome context_suite() {
  rx::Rng rng(1007);
  Checker c;
  double worst_ratio = 0;
  for (int i = 0; i < 1000; ++i) {
    const int k = 1 + static_cast<int>(rng.below(16));
    const int z = 1 + static_cast<int>(rng.below(4));
    const double q = i % 3 == 0 ? 1e-3 : (i % 3 == 1 ? 1e-4 : 1e-6);
    const auto layout = static_cast<rx::JointLayout>(rng.below(4));
    std::vector<rx::ContextExample> ex;
    for (int e = 0; e < z; ++e) ex.push_back(random_example(rng, k, 1 + static_cast<int>(rng.below(8)), layout));
    const rx::KeypointSet live{oracle::random_cloud(rng, k, 0.3), 0};
    const auto parsed = rx::parse_prompt(rx::serialize_context(ex, live, q).text);
    auto track = [&](const rx::Point3& a, const rx::Point3& b) { worst_ratio = std::max(worst_ratio, (a - b).cwiseAbs().maxCoeff() / q); };
    for (std::size_t e = 0; e < ex.size(); ++e) {
      for (std::size_t j = 0; j < ex[e].keypoints.points.size(); ++j) track(parsed.examples[e].keypoints.points[j], ex[e].keypoints.points[j]);
      c.require(parsed.examples[e].trajectory.size() == ex[e].trajectory.size(), "trajectory length changed");
      for (std::size_t t = 0; t < ex[e].trajectory.frames.size(); ++t)
        for (std::size_t j = 0; j < ex[e].trajectory.frames[t].joints.size(); ++j)
          track(parsed.examples[e].trajectory.frames[t].joints[j], ex[e].trajectory.frames[t].joints[j]);
    }
    for (std::size_t j = 0; j < live.points.size(); ++j) track(parsed.live.points[j], live.points[j]);
  }
  c.require(worst_ratio <= 0.5, "round-trip error " + fmt(worst_ratio) + " quanta");

  double worst_equi = 0;
  for (int i = 0; i < 100; ++i) {
    const int k = 3 + static_cast<int>(rng.below(12));
    std::vector<rx::ContextExample> ex;
    for (int e = 0; e < 3; ++e) ex.push_back(random_example(rng, k, 6, rx::JointLayout::Grasp));
    const rx::KeypointSet live{oracle::random_cloud(rng, k, 0.3), 0};
    const auto g = scenes::to_rx(scenes::random_rigid(rng, 1.0));
    const auto a = rx::nearest_context_warp(ex, live);
    const auto b = rx::nearest_context_warp(ex, {rx::transform_points(g, live.points), 0});
    c.require(a.example_index == b.example_index, "warp picked a different example after motion");
    for (std::size_t t = 0; t < a.trajectory.frames.size(); ++t)
      for (std::size_t j = 0; j < a.trajectory.frames[t].joints.size(); ++j)
        worst_equi = std::max(worst_equi, (b.trajectory.frames[t].joints[j] - g.apply(a.trajectory.frames[t].joints[j])).norm());
  }
  c.require(worst_equi < 1e-6, "warp equivariance error " + fmt(worst_equi));

  std::vector<rx::ContextExample> ex{random_example(rng, 6, 5, rx::JointLayout::Press)};
  const rx::KeypointSet live{oracle::random_cloud(rng, 6, 0.3), 0};
  GarbageBackend garbage;
  const auto r = rx::generate_trajectory(garbage, ex, live, {});
  c.require(r.fallback_used, "garbage output did not trigger the fallback");
  c.require(r.trajectory.size() == 5, "fallback trajectory length");
  return c.outcome("1000 round trips within " + fmt(worst_ratio) + " quanta, warp equivariance " + fmt(worst_equi) +
                   ", fallback used after " + std::to_string(r.attempts) + " attempts");
}

Outcome retrieval_suite() {
  rx::Rng rng(1008);
  Checker c;
  auto pairs = [](const std::vector<rx::ClipSpan>& s) {
    std::vector<std::pair<double, double>> out;
    for (const auto& x : s) out.emplace_back(x.start_s, x.end_s);
    return out;
  };
  for (int i = 0; i < 500; ++i) {
    std::vector<rx::ClipSpan> p, g;
    const int np = static_cast<int>(rng.below(7)), ng = static_cast<int>(rng.below(7));
    for (int j = 0; j < np; ++j) {
      // Snap some endpoints to a coarse grid so exact-tolerance ties occur.
      const double a = j % 2 ? rng.uniform(0, 40) : std::round(rng.uniform(0, 40));
      p.push_back({a, a + std::round(rng.uniform(1, 12)), 0, -1});
    }
    for (int j = 0; j < ng; ++j) {
      const double a = j % 2 ? rng.uniform(0, 40) : std::round(rng.uniform(0, 40));
      g.push_back({a, a + std::round(rng.uniform(1, 12)), 0, -1});
    }
    const double tol = i % 2 ? std::round(rng.uniform(0, 5)) : rng.uniform(0, 5);
    const auto s = rx::evaluate_retrieval(p, g, tol);
    const int want = oracle::max_matching(pairs(p), pairs(g), tol);
    c.require(s.matches == want, "set " + std::to_string(i) + ": " + std::to_string(s.matches) + " vs " + std::to_string(want));
    if (np) c.require(s.precision && *s.precision == double(want) / np, "precision of set " + std::to_string(i));
    if (ng) c.require(s.recall && *s.recall == double(want) / ng, "recall of set " + std::to_string(i));
  }
  const std::vector<rx::ClipSpan> x{{3, 9, 0, -1}, {42, 47, 0, -1}};
  const auto same = rx::evaluate_retrieval(x, x, 0.0);
  c.require(same.precision == 1.0 && same.recall == 1.0, "evaluate(X, X) != (1, 1)");
  c.require(rx::evaluate_retrieval({{3, 9, 0, -1}}, {{6, 12, 0, -1}}, 3.0).matches == 1, "delta == tolerance did not match");
  c.require(rx::evaluate_retrieval({{3, 9, 0, -1}}, {{6, 6.5, 0, -1}}, 3.0).matches == 1, "delta == tolerance on both ends did not match");
  c.require(rx::evaluate_retrieval({{3, 9, 0, -1}}, {{6.25, 12, 0, -1}}, 3.0).matches == 0, "delta > tolerance matched");
  return c.outcome("500 random sets agree with exhaustive matching; identity and boundary pinned");
}

struct SceneRun {
  rx::SynthScene scene;
  rx::ExecutionResult result;
  double seconds = 0;
};

SceneRun run_scene(const fs::path& dir, bool write_scene) {
  SceneRun r;
  r.scene = write_scene ? rx::write_synthetic_scene(dir) : rx::SynthScene{};
  const auto t0 = Clock::now();
  const auto config = rx::load_config(dir / "pipeline.toml", {}, false);
  const auto rec = rx::ingest(dir / "recording.json");
  const auto live = rx::load_live_frame(dir / "live.json");
  r.result = rx::execute_command(rec, live, rx::Command("pick up the mug"), config);
  r.seconds = seconds_since(t0);
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rx_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome end_to_end() {
  const auto run = run_scene(scratch("e2e"), true);
  Checker c;
  if (!run.result.ok()) {
    const auto& f = *run.result.diagnostics.failure;
    return {false, "stage " + f.stage + " failed: " + f.message};
  }
  const auto expected = run.scene.expected_live_poses();
  c.require(run.result.gripper && run.result.gripper->size() == static_cast<int>(expected.size()), "trajectory length");
  double worst_t = 0, worst_r = 0;
  if (run.result.gripper)
    for (std::size_t i = 0; i < std::min(expected.size(), run.result.gripper->poses.size()); ++i) {
      const auto& p = run.result.gripper->poses[i].pose;
      worst_t = std::max(worst_t, (p.translation() - expected[i].translation()).norm());
      worst_r = std::max(worst_r, oracle::angle_between(p.rotation(), expected[i].rotation()));
    }
  c.require(worst_t < 1e-4, "position error " + fmt(worst_t) + " m");
  c.require(worst_r < 1e-4, "rotation error " + fmt(worst_r) + " rad");
  c.require(run.seconds < 5.0, "runtime " + fmt(run.seconds) + " s");
  c.require(run.result.generated && !run.result.generated->fallback_used, "baseline backend output was not used");
  return c.outcome(std::to_string(expected.size()) + " steps, max position " + fmt(worst_t) + " m, max rotation " + fmt(worst_r) +
                   " rad, " + fmt(run.seconds) + " s");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  rx::write_synthetic_scene(dir);
  const auto a = run_scene(dir, false);
  const auto b = run_scene(dir, false);
  rx::export_result(a.result, dir / "run_a", {rx::ExportFormat::Json});
  rx::export_result(b.result, dir / "run_b", {rx::ExportFormat::Json});
  const auto ja = slurp(dir / "run_a" / "result.json"), jb = slurp(dir / "run_b" / "result.json");
  Checker c;
  c.require(a.result.ok() && b.result.ok(), "pipeline failed");
  c.require(!ja.empty() && ja == jb, "exported JSON differs between runs");
  return c.outcome("two runs, " + std::to_string(ja.size()) + " bytes of identical JSON");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kabsch-oracle", kabsch_suite},
      {"robust-registration", robust_suite},
      {"projection-round-trip", projection_suite},
      {"descriptor-selection", descriptor_suite},
      {"stabilization", stabilization_suite},
      {"gripper-heuristics", gripper_suite},
      {"context-engine", context_suite},
      {"retrieval-evaluator", retrieval_suite},
      {"end-to-end-spatial-generalisation", end_to_end},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
