#include <Eigen/Geometry>
#include <Eigen/LU>
#include <doctest.h>

#include <filesystem>
#include <string>

#include "oracles.hpp"
#include "rx/error.hpp"
#include "rx/gripper.hpp"
#include "scenes.hpp"

namespace fs = std::filesystem;

namespace {

template <typename Fn>
rx::ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const rx::Error& e) {
    return e.kind();
  }
  FAIL("expected an rx::Error");
  return rx::ErrorKind::Io;
}

const rx::GripperModel kModel = rx::GripperModel::robotiq_2f85();

rx::HandJointFrame moved(const rx::HandJointFrame& f, const rx::RigidTransform& g) {
  rx::HandJointFrame out = f;
  for (auto& j : out.joints) j = g.apply(j);
  return out;
}

void check_pose(const rx::RigidTransform& got, const rx::RigidTransform& want, double tol) {
  CHECK(oracle::angle_between(got.rotation(), want.rotation()) < tol);
  CHECK((got.translation() - want.translation()).norm() < tol);
}

std::vector<rx::Point3> contact_samples(const rx::GripperModel& m) {
  const rx::Point3 span = m.contact_base - m.contact_tip;
  return {m.contact_tip, m.contact_tip + span / 3.0, m.contact_tip + 2.0 * span / 3.0, m.contact_base};
}

}  // namespace

TEST_CASE("reference model validates") {
  CHECK_NOTHROW(kModel.validate());
  auto bad = kModel;
  bad.contact_mid.x() += 0.01;
  CHECK(kind_of([&] { bad.validate(); }) == rx::ErrorKind::InvalidArgument);
  bad = kModel;
  bad.stroke = 0;
  CHECK(kind_of([&] { bad.validate(); }) == rx::ErrorKind::InvalidArgument);
}

TEST_CASE("opening fraction boundaries") {
  CHECK(rx::opening_fraction(0.0, 0.085) == 0.0);
  CHECK(rx::opening_fraction(0.085, 0.085) == 1.0);
  CHECK(rx::opening_fraction(0.2, 0.085) == 1.0);
  CHECK(rx::opening_fraction(0.0425, 0.085) == 0.5);
  rx::Rng rng(400);
  double prev = -1;
  for (int i = 0; i <= 100; ++i) {
    const double f = rx::opening_fraction(0.001 * i, 0.085);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("grasp pose examples") {
  rx::Rng rng(401);
  const auto g = scenes::to_rx(scenes::random_rigid(rng, 0.5));
  const auto exact = rx::grasp_pose(scenes::grasp_hand(g, 0.085, kModel), kModel);
  check_pose(exact.pose, g, 1e-9);
  CHECK(exact.residual_rms < 1e-9);
  CHECK(exact.opening_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact.heuristic == rx::HeuristicKind::Grasp);

  const auto half = rx::grasp_pose(scenes::grasp_hand(g, 0.0425, kModel), kModel);
  check_pose(half.pose, g, 1e-9);
  CHECK(half.opening_fraction == doctest::Approx(0.5).epsilon(1e-12));
  // Two tips each 0.02125 m from their landmarks, palm exact.
  CHECK(half.residual_rms == doctest::Approx(std::sqrt(2.0 * 0.02125 * 0.02125 / 3.0)).epsilon(1e-9));

  CHECK(rx::grasp_pose(scenes::grasp_hand(g, 0.12, kModel), kModel).opening_fraction == 1.0);
  CHECK(kind_of([&] { rx::grasp_pose(scenes::grasp_hand(g, 0.0, kModel), kModel); }) == rx::ErrorKind::DegenerateHand);

  rx::HandJointFrame line;
  for (int j = 0; j < 21; ++j) line.joints[static_cast<std::size_t>(j)] = rx::Point3(0.01 * j, 0, 0);
  CHECK(kind_of([&] { rx::grasp_pose(line, kModel); }) == rx::ErrorKind::DegenerateHand);
}

TEST_CASE("press pose examples") {
  // Straight index finger along +x, evenly spaced.
  rx::HandJointFrame f;
  for (int j = 0; j < 21; ++j) f.joints[static_cast<std::size_t>(j)] = rx::Point3(0, 0.1, 0.5);
  f[rx::Joint::IndexTip] = {0.04, 0, 0.5};
  f[rx::Joint::IndexDip] = {0.04 * 2 / 3.0, 0, 0.5};
  f[rx::Joint::IndexPip] = {0.04 / 3.0, 0, 0.5};
  f[rx::Joint::IndexMcp] = {0.0, 0, 0.5};
  const auto p = rx::press_pose(f, kModel);
  const rx::Point3 dir = p.pose.rotation() * (kModel.contact_tip - kModel.contact_base).normalized();
  CHECK((dir - rx::Point3(1, 0, 0)).norm() < 1e-12);
  CHECK(p.residual_rms < 1e-12);
  CHECK(p.opening_fraction == 0.0);
  CHECK(p.heuristic == rx::HeuristicKind::Press);
  CHECK(p.pose.rotation().determinant() == doctest::Approx(1.0));

  rx::HandJointFrame same;
  for (auto& j : same.joints) j = {0.1, 0.2, 0.3};
  CHECK(kind_of([&] { rx::press_pose(same, kModel); }) == rx::ErrorKind::DegenerateHand);
}

TEST_CASE("bent press and push recover the generating pose") {
  rx::Rng rng(402);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = scenes::to_rx(scenes::random_rigid(rng, 0.5));
    const double bend = rng.uniform(0.002, 0.01);
    // The contact line fit sits halfway between the straight ends and the bent middle.
    const rx::RigidTransform want(g.rotation(), g.translation() + g.rotation() * rx::Point3(-bend / 2, 0, 0));
    const auto press = rx::press_pose(scenes::press_hand(g, bend, kModel), kModel);
    check_pose(press.pose, want, 1e-9);
    CHECK(press.residual_rms == doctest::Approx(bend / 2).epsilon(1e-9));
    const auto push = rx::push_pose(scenes::push_hand(g, bend, kModel), kModel);
    check_pose(push.pose, want, 1e-9);
    CHECK(push.heuristic == rx::HeuristicKind::Push);
    CHECK(push.opening_fraction == 0.0);
  }
}

TEST_CASE("push with index equal to middle matches press") {
  rx::Rng rng(403);
  auto f = scenes::press_hand(scenes::to_rx(scenes::random_rigid(rng, 0.3)), 0.004, kModel);
  f[rx::Joint::MiddleTip] = f.index_tip();
  f[rx::Joint::MiddleDip] = f.index_dip();
  f[rx::Joint::MiddlePip] = f.index_pip();
  f[rx::Joint::MiddleMcp] = f.index_mcp();
  const auto a = rx::press_pose(f, kModel);
  const auto b = rx::push_pose(f, kModel);
  CHECK((a.pose.rotation() - b.pose.rotation()).norm() < 1e-12);
  CHECK((a.pose.translation() - b.pose.translation()).norm() < 1e-12);
}

TEST_CASE("push targets are midpoints") {
  rx::HandJointFrame f;
  const rx::Joint index[4] = {rx::Joint::IndexTip, rx::Joint::IndexDip, rx::Joint::IndexPip, rx::Joint::IndexMcp};
  const rx::Joint middle[4] = {rx::Joint::MiddleTip, rx::Joint::MiddleDip, rx::Joint::MiddlePip, rx::Joint::MiddleMcp};
  for (int i = 0; i < 4; ++i) {
    f[index[i]] = {0.01 * i, 0.01, 0.3 + 0.001 * i * i};
    f[middle[i]] = {0.01 * i, -0.01, 0.3 + 0.001 * i * i};
  }
  for (const auto& p : rx::extract_subset(f, rx::HeuristicKind::Push)) CHECK(p.y() == 0.0);
}

TEST_CASE("property: heuristics are rigidly equivariant") {
  rx::Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const auto base = scenes::to_rx(scenes::random_rigid(rng, 0.3));
    const auto g = scenes::to_rx(scenes::random_rigid(rng, 1.0));
    // Perturb the hand so residuals are nonzero.
    auto grasp = scenes::grasp_hand(base, rng.uniform(0.01, 0.08), kModel);
    auto press = scenes::press_hand(base, rng.uniform(0.001, 0.01), kModel);
    auto push = scenes::push_hand(base, rng.uniform(0.001, 0.01), kModel);
    for (auto* f : {&grasp, &press, &push})
      for (auto& j : f->joints) j += oracle::random_vector(rng, 0.002);

    const auto a = rx::grasp_pose(grasp, kModel), ga = rx::grasp_pose(moved(grasp, g), kModel);
    check_pose(ga.pose, g * a.pose, 1e-9);
    CHECK(ga.opening_fraction == doctest::Approx(a.opening_fraction).epsilon(1e-12));
    const auto b = rx::press_pose(press, kModel), gb = rx::press_pose(moved(press, g), kModel);
    check_pose(gb.pose, g * b.pose, 1e-9);
    const auto c = rx::push_pose(push, kModel), gc = rx::push_pose(moved(push, g), kModel);
    check_pose(gc.pose, g * c.pose, 1e-9);
    for (const auto* p : {&a, &b, &c}) CHECK(p->pose.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("property: residuals equal the least-squares minimum") {
  rx::Rng rng(405);
  for (int trial = 0; trial < 100; ++trial) {
    const auto base = scenes::to_rx(scenes::random_rigid(rng, 0.3));
    auto grasp = scenes::grasp_hand(base, rng.uniform(0.01, 0.08), kModel);
    auto press = scenes::press_hand(base, rng.uniform(0.0, 0.01), kModel);
    for (auto* f : {&grasp, &press})
      for (auto& j : f->joints) j += oracle::random_vector(rng, 0.003);

    const std::vector<rx::Point3> gsrc{kModel.left_tip, kModel.right_tip, kModel.palm_base};
    const std::vector<rx::Point3> gdst{grasp.index_tip(), grasp.thumb_tip(), 0.5 * (grasp.index_mcp() + grasp.thumb_dip())};
    CHECK(rx::grasp_pose(grasp, kModel).residual_rms ==
          doctest::Approx(oracle::rms(oracle::horn_fit(gsrc, gdst), gsrc, gdst)).epsilon(1e-9));

    const auto psrc = contact_samples(kModel);
    const std::vector<rx::Point3> pdst{press.index_tip(), press.index_dip(), press.index_pip(), press.index_mcp()};
    CHECK(rx::press_pose(press, kModel).residual_rms ==
          doctest::Approx(oracle::rms(oracle::horn_fit(psrc, pdst), psrc, pdst)).epsilon(1e-9));
  }
}

TEST_CASE("close commands") {
  auto poses = [](std::vector<double> fr) {
    std::vector<rx::GripperPose> out;
    for (double f : fr) out.push_back({{}, f, rx::HeuristicKind::Grasp, 0.0});
    return out;
  };
  const auto p = poses({1.0, 0.2, 0.2, 0.2, 0.7, 0.2, 0.8, 0.9, 0.1});
  CHECK(rx::close_commands(p, rx::HeuristicKind::Grasp) ==
        std::vector<bool>{false, false, true, true, true, true, true, false, false});
  // A single dip never closes.
  CHECK(rx::close_commands(poses({0.9, 0.1, 0.9, 0.1, 0.9}), rx::HeuristicKind::Grasp) == std::vector<bool>(5, false));
  CHECK(rx::close_commands(poses({0.9, 0.9, 0.9}), rx::HeuristicKind::Press) == std::vector<bool>(3, true));
  CHECK(rx::close_commands(poses({0.9}), rx::HeuristicKind::Push) == std::vector<bool>{true});
}

TEST_CASE("map_trajectory") {
  rx::Rng rng(406);
  rx::HandTrajectory traj{0, rx::JointLayout::Mano21, {}};
  std::vector<rx::RigidTransform> truth;
  for (int t = 0; t < 10; ++t) {
    truth.push_back(scenes::to_rx(scenes::random_rigid(rng, 0.3)));
    auto f = scenes::grasp_hand(truth.back(), 0.085 - 0.008 * t, kModel);
    f.frame_id = t;
    traj.frames.push_back(rx::to_joint_frame(f));
  }
  const auto out = rx::map_trajectory(traj, rx::HeuristicKind::Grasp, kModel);
  REQUIRE(out.size() == 10);
  for (int t = 0; t < 10; ++t) check_pose(out.poses[static_cast<std::size_t>(t)].pose, truth[static_cast<std::size_t>(t)], 1e-9);
  CHECK(out.frame_ids == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(out.closed.back());

  // Already-restricted layouts give the same poses.
  const auto sub = rx::map_trajectory(rx::restrict_to_heuristic(traj, rx::HeuristicKind::Grasp), rx::HeuristicKind::Grasp, kModel);
  CHECK((sub.poses[3].pose.rotation() - out.poses[3].pose.rotation()).norm() == 0.0);

  const auto press = rx::map_trajectory(traj, rx::HeuristicKind::Press, kModel);
  for (const auto& p : press.poses) CHECK(p.opening_fraction == 0.0);

  auto broken = traj;
  broken.frames[4] = rx::to_joint_frame(scenes::grasp_hand(truth[4], 0.0, kModel));
  broken.frames[4].frame_id = 4;
  try {
    rx::map_trajectory(broken, rx::HeuristicKind::Grasp, kModel);
    FAIL("expected DegenerateHand");
  } catch (const rx::Error& e) {
    CHECK(e.kind() == rx::ErrorKind::DegenerateHand);
    CHECK(std::string(e.what()).find("frame 4") != std::string::npos);
  }
  CHECK(kind_of([&] { rx::map_trajectory(rx::restrict_to_heuristic(traj, rx::HeuristicKind::Press), rx::HeuristicKind::Grasp, kModel); }) ==
        rx::ErrorKind::InvalidArgument);
}

TEST_CASE("gripper model files round trip") {
  const auto dir = fs::temp_directory_path() / "rx_test_gripper";
  fs::create_directories(dir);
  rx::write_gripper_model(dir / "g.json", kModel);
  const auto back = rx::read_gripper_model(dir / "g.json");
  CHECK(back.stroke == kModel.stroke);
  CHECK(back.left_tip == kModel.left_tip);
  CHECK(back.contact_base == kModel.contact_base);
  CHECK(kind_of([&] { rx::read_gripper_model(dir / "none.json"); }) == rx::ErrorKind::MissingAsset);
}
