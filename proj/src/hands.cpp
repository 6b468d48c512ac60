#include "rx/hands.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rx/error.hpp"

namespace rx {

using nlohmann::json;

bool HandJointFrame::finite() const {
  for (const auto& j : joints)
    if (!j.allFinite()) return false;
  return true;
}

std::string_view to_string(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::Grasp: return "grasp";
    case HeuristicKind::Press: return "press";
    case HeuristicKind::Push: return "push";
  }
  return "grasp";
}

HeuristicKind parse_heuristic(std::string_view text) {
  if (text == "grasp") return HeuristicKind::Grasp;
  if (text == "press") return HeuristicKind::Press;
  if (text == "push") return HeuristicKind::Push;
  throw Error(ErrorKind::InvalidArgument, "unknown heuristic '" + std::string(text) + "'");
}

int joint_count(JointLayout layout) { return layout == JointLayout::Mano21 ? kHandJointCount : 4; }

std::string_view to_string(JointLayout layout) {
  switch (layout) {
    case JointLayout::Mano21: return "mano21";
    case JointLayout::Grasp: return "grasp";
    case JointLayout::Press: return "press";
    case JointLayout::Push: return "push";
  }
  return "mano21";
}

JointLayout parse_layout(std::string_view text) {
  if (text == "mano21") return JointLayout::Mano21;
  return layout_for(parse_heuristic(text));
}

JointLayout layout_for(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::Grasp: return JointLayout::Grasp;
    case HeuristicKind::Press: return JointLayout::Press;
    case HeuristicKind::Push: return JointLayout::Push;
  }
  return JointLayout::Grasp;
}

JointFrame to_joint_frame(const HandJointFrame& frame) {
  return {frame.frame_id, std::vector<Point3>(frame.joints.begin(), frame.joints.end())};
}

HandJointFrame to_hand_frame(const JointFrame& frame) {
  if (frame.joints.size() != kHandJointCount)
    throw Error(ErrorKind::MissingJoints, "frame " + std::to_string(frame.frame_id) + " has " +
                                              std::to_string(frame.joints.size()) + " joints, expected 21");
  HandJointFrame out;
  out.frame_id = frame.frame_id;
  std::copy(frame.joints.begin(), frame.joints.end(), out.joints.begin());
  return out;
}

std::vector<Point3> extract_subset(const HandJointFrame& f, HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::Grasp:
      return {f.index_tip(), f.thumb_tip(), f.index_mcp(), f.thumb_dip()};
    case HeuristicKind::Press:
      return {f.index_tip(), f.index_dip(), f.index_pip(), f.index_mcp()};
    case HeuristicKind::Push:
      return {0.5 * (f.index_tip() + f.middle_tip()), 0.5 * (f.index_dip() + f.middle_dip()),
              0.5 * (f.index_pip() + f.middle_pip()), 0.5 * (f.index_mcp() + f.middle_mcp())};
  }
  return {};
}

HandTrajectory restrict_to_heuristic(const HandTrajectory& trajectory, HeuristicKind kind) {
  if (trajectory.layout != JointLayout::Mano21)
    throw Error(ErrorKind::InvalidArgument, "restrict_to_heuristic expects a mano21 trajectory");
  HandTrajectory out{trajectory.clip_id, layout_for(kind), {}};
  for (const auto& f : trajectory.frames) out.frames.push_back({f.frame_id, extract_subset(to_hand_frame(f), kind)});
  return out;
}

HandTrajectory transform_trajectory(const RigidTransform& transform, const HandTrajectory& trajectory) {
  HandTrajectory out = trajectory;
  for (auto& f : out.frames) f.joints = transform_points(transform, f.joints);
  return out;
}

std::vector<FrameInterval> filter_hand_frames(const PresenceTimeline& timeline, int min_gap) {
  std::vector<FrameInterval> runs;
  const int n = static_cast<int>(timeline.present.size());
  for (int i = 0; i < n;) {
    if (!timeline.present[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && timeline.present[j + 1]) ++j;
    const int gap = runs.empty() ? 0 : i - runs.back().last - 1;
    if (!runs.empty() && gap < min_gap) {
      runs.back().last = j;
    } else {
      runs.push_back({i, j});
    }
    i = j + 1;
  }
  return runs;
}

void HandObservations::add(const Detection& detection) {
  auto it = by_frame_.find(detection.frame);
  if (it == by_frame_.end()) {
    by_frame_.emplace(detection.frame, detection);
    return;
  }
  Detection& current = it->second;
  if (!detection.present) return;
  if (!current.present || detection.confidence > current.confidence) current = detection;
}

const HandJointFrame* HandObservations::find(int frame) const {
  auto it = by_frame_.find(frame);
  if (it == by_frame_.end() || !it->second.present) return nullptr;
  return &it->second.joints;
}

PresenceTimeline HandObservations::timeline(int frame_count) const {
  PresenceTimeline t;
  t.present.assign(static_cast<std::size_t>(std::max(frame_count, 0)), false);
  for (const auto& [frame, d] : by_frame_) {
    if (frame >= 0 && frame < frame_count && d.present) t.present[frame] = true;
  }
  return t;
}

HandObservations read_hand_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  HandObservations hands;
  try {
    const json doc = json::parse(in);
    for (const auto& f : doc.at("frames")) {
      HandObservations::Detection d;
      d.frame = f.at("t").get<int>();
      d.present = f.value("present", true);
      d.confidence = f.value("confidence", 1.0);
      d.joints.frame_id = d.frame;
      if (d.present) {
        const auto& joints = f.at("joints");
        if (!joints.is_array() || joints.size() != kHandJointCount)
          throw Error(ErrorKind::Schema, "hand file " + path.string() + ": frame " + std::to_string(d.frame) +
                                             " must have 21 joints");
        for (int j = 0; j < kHandJointCount; ++j) {
          const auto& p = joints[j];
          d.joints.joints[j] = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
        }
        if (!d.joints.finite())
          throw Error(ErrorKind::Schema, "hand file " + path.string() + ": non-finite joint");
      }
      hands.add(d);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "hand file " + path.string() + ": " + e.what());
  }
  return hands;
}

void write_hand_file(const std::filesystem::path& path, const HandObservations& hands) {
  json frames = json::array();
  for (const auto& [frame, d] : hands.detections()) {
    json f{{"t", frame}, {"present", d.present}, {"confidence", d.confidence}};
    if (d.present) {
      json joints = json::array();
      for (const auto& p : d.joints.joints) joints.push_back({p.x(), p.y(), p.z()});
      f["joints"] = joints;
    }
    frames.push_back(f);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << json{{"frames", frames}}.dump() << '\n';
}

HandTrajectory build_hand_trajectory(int clip_id, std::span<const int> frame_ids,
                                     const HandObservations& raw, const FramePoses& poses) {
  HandTrajectory traj{clip_id, JointLayout::Mano21, {}};
  traj.frames.reserve(frame_ids.size());
  for (int frame : frame_ids) {
    const HandJointFrame* joints = raw.find(frame);
    if (!joints) throw Error(ErrorKind::MissingJoints, "no hand joints for frame " + std::to_string(frame));
    const FramePose* pose = poses.find(frame);
    if (!pose) throw Error(ErrorKind::MissingPose, "no camera pose for frame " + std::to_string(frame));
    traj.frames.push_back({frame, transform_points(pose->to_first, joints->joints)});
  }
  return traj;
}

HandTrajectory resample_trajectory(const HandTrajectory& trajectory, int target_length) {
  if (target_length < 2) throw Error(ErrorKind::InvalidArgument, "resample: target length must be >= 2");
  if (trajectory.frames.empty()) throw Error(ErrorKind::InvalidArgument, "resample: empty trajectory");
  const int n = trajectory.size();
  if (n == target_length) return trajectory;

  HandTrajectory out{trajectory.clip_id, trajectory.layout, {}};
  out.frames.reserve(static_cast<std::size_t>(target_length));
  for (int i = 0; i < target_length; ++i) {
    JointFrame f{i, {}};
    if (n == 1) {
      f.joints = trajectory.frames[0].joints;
    } else if (i == target_length - 1) {
      f.joints = trajectory.frames.back().joints;
    } else {
      const double pos = static_cast<double>(i) * (n - 1) / (target_length - 1);
      const int lo = static_cast<int>(std::floor(pos));
      const double frac = pos - lo;
      const auto& a = trajectory.frames[lo].joints;
      const auto& b = trajectory.frames[lo + 1].joints;
      f.joints.resize(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) f.joints[j] = a[j] + frac * (b[j] - a[j]);
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace rx
