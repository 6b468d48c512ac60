#include "scenes.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <set>

namespace scenes {

rx::RigidTransform to_rx(const oracle::Rigid& g) { return {g.R, g.t}; }

oracle::Rigid random_rigid(rx::Rng& rng, double translation_scale) {
  return {oracle::random_rotation(rng), oracle::random_vector(rng, translation_scale)};
}

PlantedDescriptors planted_descriptors(rx::Rng& rng, int z, int rows, int cols, int dim, int k, double jitter) {
  const int n = rows * cols;
  PlantedDescriptors out;
  std::vector<std::vector<double>> planted(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& d : planted)
    for (auto& x : d) x = rng.normal();
  for (int f = 0; f < z; ++f) {
    rx::RowMatrix data(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) data(i, j) = rng.normal();
    std::set<int> used;
    std::vector<int> pos;
    while (static_cast<int>(pos.size()) < k) {
      const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (used.insert(p).second) pos.push_back(p);
    }
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < dim; ++j)
        data(pos[static_cast<std::size_t>(i)], j) =
            planted[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] + (f == 0 ? 0.0 : jitter * rng.normal());
    out.grids.emplace_back(f, rows, cols, rx::PatchLayout{8, 0, 0}, data);
    out.positions.push_back(pos);
  }
  out.planted_patches = out.positions[0];
  return out;
}

namespace {

bool in_view(const Eigen::Vector3d& p, const rx::CameraIntrinsics& k, double margin) {
  if (p.z() <= 0.1) return false;
  const auto [u, v] = oracle::project(p, k.fx, k.fy, k.cx, k.cy);
  return u >= margin && v >= margin && u <= k.width - 1 - margin && v <= k.height - 1 - margin;
}

}  // namespace

Rig moving_camera_rig(rx::Rng& rng, int frames, int static_points, int dynamic_points) {
  Rig rig;
  rig.intrinsics = {525.0, 525.0, 319.5, 239.5, 640, 480};
  const auto& K = rig.intrinsics;
  rig.to_first.push_back(rx::RigidTransform::identity());
  for (int t = 1; t < frames; ++t) {
    const Eigen::Vector3d axis = oracle::random_vector(rng, 1.0).normalized();
    const double angle = rng.uniform(-0.08, 0.08);
    rig.to_first.push_back(rx::RigidTransform::from_axis_angle(axis, angle, oracle::random_vector(rng, 0.08)));
  }
  for (int t = 0; t < frames; ++t) {
    rig.frame_ids.push_back(100 + t);
    rig.depths.emplace_back(K.width, K.height, 0.0);
  }
  std::vector<std::set<std::pair<long, long>>> taken(static_cast<std::size_t>(frames));

  // Positions (frame-1 coordinates) of a point over time.
  auto place = [&](const std::vector<Eigen::Vector3d>& world) {
    std::vector<Eigen::Vector3d> cam;
    std::vector<std::pair<long, long>> px;
    for (int t = 0; t < frames; ++t) {
      const Eigen::Vector3d p = rig.to_first[static_cast<std::size_t>(t)].inverse().apply(world[static_cast<std::size_t>(t)]);
      if (!in_view(p, K, 3.0)) return false;
      const auto [u, v] = oracle::project(p, K.fx, K.fy, K.cx, K.cy);
      const std::pair<long, long> key{std::lround(u), std::lround(v)};
      // Keep a one-pixel moat so no two tracks share a depth sample.
      for (long du = -1; du <= 1; ++du)
        for (long dv = -1; dv <= 1; ++dv)
          if (taken[static_cast<std::size_t>(t)].count({key.first + du, key.second + dv})) return false;
      cam.push_back(p);
      px.push_back(key);
    }
    rx::Track tr{static_cast<int>(rig.tracks.tracks.size()), {}};
    for (int t = 0; t < frames; ++t) {
      const auto& p = cam[static_cast<std::size_t>(t)];
      const auto [u, v] = oracle::project(p, K.fx, K.fy, K.cx, K.cy);
      taken[static_cast<std::size_t>(t)].insert(px[static_cast<std::size_t>(t)]);
      rig.depths[static_cast<std::size_t>(t)].set(static_cast<int>(px[static_cast<std::size_t>(t)].first),
                                                   static_cast<int>(px[static_cast<std::size_t>(t)].second), p.z());
      tr.observations.push_back({rig.frame_ids[static_cast<std::size_t>(t)], {u, v}, true});
    }
    rig.tracks.tracks.push_back(std::move(tr));
    return true;
  };

  auto random_point = [&]() {
    const double u = rng.uniform(60.0, K.width - 60.0), v = rng.uniform(60.0, K.height - 60.0);
    const double d = rng.uniform(2.0, 4.0);
    return Eigen::Vector3d((u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d);
  };

  // Interleave static and dynamic tracks so the dynamic ones are not all at the end.
  int statics = 0, dynamics = 0;
  while (statics < static_points || dynamics < dynamic_points) {
    const bool dynamic = dynamics < dynamic_points &&
                         (statics >= static_points || rng.below(static_cast<std::uint64_t>(static_points + dynamic_points)) <
                                                          static_cast<std::uint64_t>(dynamic_points));
    const Eigen::Vector3d p0 = random_point();
    std::vector<Eigen::Vector3d> world;
    const Eigen::Vector3d vel = dynamic ? Eigen::Vector3d(oracle::random_vector(rng, 1.0).normalized() * rng.uniform(0.05, 0.1))
                                        : Eigen::Vector3d::Zero();
    for (int t = 0; t < frames; ++t) world.push_back(p0 + vel * t);
    if (!place(world)) continue;
    rig.is_static.push_back(!dynamic);
    if (dynamic) {
      ++dynamics;
    } else {
      ++statics;
      rig.static_world.push_back(p0);
    }
  }
  return rig;
}

rx::HandJointFrame grasp_hand(const rx::RigidTransform& pose, double separation, const rx::GripperModel& m) {
  // Scale the fingertips toward each other about their midpoint; the palm point stays put.
  const Eigen::Vector3d mid = 0.5 * (m.left_tip + m.right_tip);
  const Eigen::Vector3d half = 0.5 * (m.left_tip - m.right_tip).normalized() * separation;
  rx::HandJointFrame f;
  for (int j = 0; j < rx::kHandJointCount; ++j) f.joints[static_cast<std::size_t>(j)] = pose.apply(m.palm_base + Eigen::Vector3d(0.01 * j, -0.005 * j, -0.03));
  f[rx::Joint::IndexTip] = pose.apply(mid + half);
  f[rx::Joint::ThumbTip] = pose.apply(mid - half);
  const Eigen::Vector3d off(0.013, 0.021, -0.004);
  f[rx::Joint::IndexMcp] = pose.apply(m.palm_base + off);
  f[rx::Joint::ThumbIp] = pose.apply(m.palm_base - off);
  return f;
}

namespace {

std::array<Eigen::Vector3d, 4> bent_line(const rx::GripperModel& m, double bend) {
  const Eigen::Vector3d span = m.contact_base - m.contact_tip;
  const Eigen::Vector3d axis = (m.contact_tip - m.contact_base).normalized();
  Eigen::Vector3d closing = m.left_tip - m.right_tip;
  closing -= closing.dot(axis) * axis;
  const Eigen::Vector3d normal = axis.cross(closing.normalized());
  return {m.contact_tip, m.contact_tip + span / 3.0 + bend * normal, m.contact_tip + 2.0 * span / 3.0 + bend * normal,
          m.contact_base};
}

}  // namespace

rx::HandJointFrame press_hand(const rx::RigidTransform& pose, double bend, const rx::GripperModel& m) {
  const auto line = bent_line(m, bend);
  rx::HandJointFrame f;
  for (int j = 0; j < rx::kHandJointCount; ++j) f.joints[static_cast<std::size_t>(j)] = pose.apply(Eigen::Vector3d(0.02, 0.01 * j, -0.05));
  f[rx::Joint::IndexTip] = pose.apply(line[0]);
  f[rx::Joint::IndexDip] = pose.apply(line[1]);
  f[rx::Joint::IndexPip] = pose.apply(line[2]);
  f[rx::Joint::IndexMcp] = pose.apply(line[3]);
  return f;
}

rx::HandJointFrame push_hand(const rx::RigidTransform& pose, double bend, const rx::GripperModel& m) {
  const auto line = bent_line(m, bend);
  const Eigen::Vector3d side = (m.left_tip - m.right_tip).normalized() * 0.009;
  rx::HandJointFrame f;
  for (int j = 0; j < rx::kHandJointCount; ++j) f.joints[static_cast<std::size_t>(j)] = pose.apply(Eigen::Vector3d(-0.02, 0.01 * j, -0.05));
  const rx::Joint index[4] = {rx::Joint::IndexTip, rx::Joint::IndexDip, rx::Joint::IndexPip, rx::Joint::IndexMcp};
  const rx::Joint middle[4] = {rx::Joint::MiddleTip, rx::Joint::MiddleDip, rx::Joint::MiddlePip, rx::Joint::MiddleMcp};
  for (int i = 0; i < 4; ++i) {
    f[index[i]] = pose.apply(line[static_cast<std::size_t>(i)] + side);
    f[middle[i]] = pose.apply(line[static_cast<std::size_t>(i)] - side);
  }
  return f;
}

}  // namespace scenes
