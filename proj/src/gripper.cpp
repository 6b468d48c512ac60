#include "rx/gripper.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rx/error.hpp"

namespace rx {

using nlohmann::json;

namespace {

constexpr double kMinTipSeparation = 1e-6;
constexpr double kLineTolerance = 1e-9;

double distance_to_line(const Point3& p, const Point3& a, const Point3& b) {
  const Point3 dir = (b - a).normalized();
  const Point3 d = p - a;
  return (d - d.dot(dir) * dir).norm();
}

std::array<Point3, 4> contact_samples(const GripperModel& m) {
  const Point3 span = m.contact_base - m.contact_tip;
  return {m.contact_tip, m.contact_tip + span / 3.0, m.contact_tip + 2.0 * span / 3.0, m.contact_base};
}

GripperPose grasp_from(const Point3& index_tip, const Point3& thumb_tip, const Point3& index_mcp,
                       const Point3& thumb_dip, const GripperModel& model) {
  const double separation = (index_tip - thumb_tip).norm();
  if (!(separation > kMinTipSeparation))
    throw Error(ErrorKind::DegenerateHand, "grasp: index and thumb tips coincide");
  const std::array<Point3, 3> source{model.left_tip, model.right_tip, model.palm_base};
  const std::array<Point3, 3> target{index_tip, thumb_tip, 0.5 * (index_mcp + thumb_dip)};
  if (affine_rank(target) < 2) throw Error(ErrorKind::DegenerateHand, "grasp: hand target points are collinear");
  GripperPose out;
  out.pose = estimate_rigid_transform(source, target);
  out.residual_rms = rms_residual(out.pose, source, target);
  out.opening_fraction = opening_fraction(separation, model.stroke);
  out.heuristic = HeuristicKind::Grasp;
  return out;
}

// Least-squares fit of the collinear contact samples. The line direction is the
// closed-form optimum; roll about the line is fixed by aligning the jaw-plane
// normal with the finger's bend direction, or by the shortest arc when the
// finger is straight.
GripperPose contact_line_fit(std::span<const Point3> target, HeuristicKind kind, const GripperModel& model) {
  for (const auto& p : target)
    if (!p.allFinite()) throw Error(ErrorKind::DegenerateHand, "contact fit: non-finite joint");
  const auto source = contact_samples(model);
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (int i = 0; i < 4; ++i) {
    src_mean += source[i];
    dst_mean += target[i];
  }
  src_mean /= 4.0;
  dst_mean /= 4.0;

  const Point3 axis = (model.contact_tip - model.contact_base).normalized();
  Point3 pull = Point3::Zero();
  for (int i = 0; i < 4; ++i) pull += (source[i] - src_mean).dot(axis) * (target[i] - dst_mean);
  if (!(pull.norm() > 1e-12)) throw Error(ErrorKind::DegenerateHand, "contact fit: finger joints coincide");
  const Point3 dir = pull.normalized();

  Point3 closing = model.left_tip - model.right_tip;
  closing -= closing.dot(axis) * axis;
  const Point3 jaw_normal = axis.cross(closing.normalized());

  Point3 bend = 0.5 * (target[1] + target[2]) - 0.5 * (target[0] + target[3]);
  bend -= bend.dot(dir) * dir;

  Eigen::Matrix3d rotation;
  if (bend.norm() > kLineTolerance) {
    const Point3 b = bend.normalized();
    Eigen::Matrix3d from;
    Eigen::Matrix3d to;
    from << axis, jaw_normal, axis.cross(jaw_normal);
    to << dir, b, dir.cross(b);
    rotation = to * from.transpose();
  } else {
    rotation = Eigen::Quaterniond::FromTwoVectors(axis, dir).toRotationMatrix();
  }

  GripperPose out;
  out.pose = RigidTransform(rotation, dst_mean - rotation * src_mean);
  out.residual_rms = rms_residual(out.pose, source, target);
  out.opening_fraction = 0.0;
  out.heuristic = kind;
  return out;
}

}  // namespace

GripperModel GripperModel::robotiq_2f85() {
  GripperModel m;
  m.stroke = 0.085;
  m.left_tip = {0.0, 0.0425, 0.06};
  m.right_tip = {0.0, -0.0425, 0.06};
  m.palm_base = {0.0, 0.0, 0.0};
  m.contact_tip = {0.0, 0.0, 0.06};
  m.contact_mid = {0.0, 0.0, 0.04};
  m.contact_base = {0.0, 0.0, 0.02};
  return m;
}

void GripperModel::validate() const {
  if (!(stroke > 0.0) || !std::isfinite(stroke))
    throw Error(ErrorKind::InvalidArgument, "gripper model: stroke must be positive");
  for (const auto* p : {&left_tip, &right_tip, &palm_base, &contact_tip, &contact_mid, &contact_base})
    if (!p->allFinite()) throw Error(ErrorKind::InvalidArgument, "gripper model: non-finite landmark");
  if ((contact_tip - contact_base).norm() <= kMinTipSeparation)
    throw Error(ErrorKind::InvalidArgument, "gripper model: contact line has zero length");
  if (distance_to_line(contact_mid, contact_base, contact_tip) > kLineTolerance)
    throw Error(ErrorKind::InvalidArgument, "gripper model: contact points are not collinear");
  if ((left_tip - right_tip).norm() <= kMinTipSeparation)
    throw Error(ErrorKind::InvalidArgument, "gripper model: fingertips coincide");
  const Point3 axis = (contact_tip - contact_base).normalized();
  const Point3 closing = left_tip - right_tip;
  if ((closing - closing.dot(axis) * axis).norm() <= kMinTipSeparation)
    throw Error(ErrorKind::InvalidArgument, "gripper model: closing axis parallel to the contact line");
  const std::array<Point3, 3> tri{left_tip, right_tip, palm_base};
  if (affine_rank(tri) < 2)
    throw Error(ErrorKind::InvalidArgument, "gripper model: fingertips and palm are collinear");
}

GripperModel read_gripper_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  GripperModel m;
  try {
    const json doc = json::parse(in);
    m.stroke = doc.at("stroke").get<double>();
    const auto& l = doc.at("landmarks");
    auto point = [&](const char* name) {
      const auto& p = l.at(name);
      if (!p.is_array() || p.size() != 3) throw Error(ErrorKind::Schema, std::string("landmark ") + name + " must be [x,y,z]");
      return Point3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    };
    m.left_tip = point("left_tip");
    m.right_tip = point("right_tip");
    m.palm_base = point("palm_base");
    m.contact_tip = point("contact_tip");
    m.contact_mid = point("contact_mid");
    m.contact_base = point("contact_base");
    for (const auto& [key, value] : l.items()) {
      static const std::array<std::string_view, 6> known{"left_tip", "right_tip", "palm_base",
                                                         "contact_tip", "contact_mid", "contact_base"};
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw Error(ErrorKind::Schema, "gripper model: unknown landmark '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "gripper model " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void write_gripper_model(const std::filesystem::path& path, const GripperModel& m) {
  auto arr = [](const Point3& p) { return json::array({p.x(), p.y(), p.z()}); };
  const json doc{{"stroke", m.stroke},
                 {"landmarks",
                  {{"left_tip", arr(m.left_tip)},
                   {"right_tip", arr(m.right_tip)},
                   {"palm_base", arr(m.palm_base)},
                   {"contact_tip", arr(m.contact_tip)},
                   {"contact_mid", arr(m.contact_mid)},
                   {"contact_base", arr(m.contact_base)}}}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

double opening_fraction(double separation, double stroke) {
  return std::clamp(separation / stroke, 0.0, 1.0);
}

GripperPose grasp_pose(const HandJointFrame& f, const GripperModel& model) {
  return grasp_from(f.index_tip(), f.thumb_tip(), f.index_mcp(), f.thumb_dip(), model);
}

GripperPose press_pose(const HandJointFrame& f, const GripperModel& model) {
  const auto subset = extract_subset(f, HeuristicKind::Press);
  return contact_line_fit(subset, HeuristicKind::Press, model);
}

GripperPose push_pose(const HandJointFrame& f, const GripperModel& model) {
  const auto subset = extract_subset(f, HeuristicKind::Push);
  return contact_line_fit(subset, HeuristicKind::Push, model);
}

GripperPose pose_from_subset(std::span<const Point3> s, HeuristicKind kind, const GripperModel& model) {
  if (s.size() != 4)
    throw Error(ErrorKind::WrongArity, "gripper: heuristic subset needs 4 joints, got " + std::to_string(s.size()));
  if (kind == HeuristicKind::Grasp) return grasp_from(s[0], s[1], s[2], s[3], model);
  return contact_line_fit(s, kind, model);
}

std::vector<bool> close_commands(std::span<const GripperPose> poses, HeuristicKind kind) {
  std::vector<bool> out(poses.size(), kind != HeuristicKind::Grasp);
  if (kind != HeuristicKind::Grasp) return out;
  bool closed = false;
  int below = 0;
  int above = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (poses[i].opening_fraction < 0.5) {
      ++below;
      above = 0;
    } else {
      ++above;
      below = 0;
    }
    if (!closed && below >= 2) closed = true;
    if (closed && above >= 2) closed = false;
    out[i] = closed;
  }
  return out;
}

GripperTrajectory map_trajectory(const HandTrajectory& trajectory, HeuristicKind kind,
                                 const GripperModel& model) {
  if (trajectory.frames.empty()) throw Error(ErrorKind::InvalidArgument, "gripper: empty trajectory");
  const bool full = trajectory.layout == JointLayout::Mano21;
  if (!full && trajectory.layout != layout_for(kind))
    throw Error(ErrorKind::InvalidArgument, "gripper: trajectory layout '" + std::string(to_string(trajectory.layout)) +
                                                "' does not carry the joints of heuristic '" +
                                                std::string(to_string(kind)) + "'");
  GripperTrajectory out;
  for (const auto& frame : trajectory.frames) {
    try {
      if (full) {
        out.poses.push_back(pose_from_subset(extract_subset(to_hand_frame(frame), kind), kind, model));
      } else {
        out.poses.push_back(pose_from_subset(frame.joints, kind, model));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "frame " + std::to_string(frame.frame_id) + ": " + e.what());
    }
    out.frame_ids.push_back(frame.frame_id);
  }
  out.closed = close_commands(out.poses, kind);
  return out;
}

}  // namespace rx
