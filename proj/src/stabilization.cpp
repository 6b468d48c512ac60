#include "rx/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rx/error.hpp"
#include "rx/image_io.hpp"
#include "rx/random.hpp"

namespace rx {

using nlohmann::json;

StaticMask::StaticMask(int frame_id, int width, int height, std::vector<std::uint8_t> cells)
    : frame_id_(frame_id), width_(width), height_(height), cells_(std::move(cells)) {
  if (width <= 0 || height <= 0 || cells_.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorKind::InvalidArgument, "static mask: size mismatch");
}

StaticMask read_mask_png(const std::filesystem::path& path, int frame_id) {
  const auto image = read_png_gray(path);
  std::vector<std::uint8_t> cells(image.pixels.size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = image.pixels[i] != 0 ? 1 : 0;
  return StaticMask(frame_id, image.width, image.height, std::move(cells));
}

std::optional<Pixel> Track::at(int frame) const {
  for (const auto& o : observations) {
    if (o.frame == frame) return o.visible ? std::optional<Pixel>(o.pixel) : std::nullopt;
  }
  return std::nullopt;
}

TrackSet read_track_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  TrackSet set;
  try {
    const json doc = json::parse(in);
    for (const auto& t : doc.at("tracks")) {
      Track track;
      track.id = t.at("id").get<int>();
      for (const auto& p : t.at("points")) {
        if (!p.is_array() || p.size() != 4) throw Error(ErrorKind::Schema, "track point must be [t,u,v,visible]");
        TrackObservation o;
        o.frame = p[0].get<int>();
        o.pixel = {p[1].get<double>(), p[2].get<double>()};
        o.visible = p[3].is_boolean() ? p[3].get<bool>() : p[3].get<double>() != 0.0;
        track.observations.push_back(o);
      }
      set.tracks.push_back(std::move(track));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "track file " + path.string() + ": " + e.what());
  }
  return set;
}

void write_track_file(const std::filesystem::path& path, const TrackSet& tracks) {
  json doc;
  doc["tracks"] = json::array();
  for (const auto& t : tracks.tracks) {
    json points = json::array();
    for (const auto& o : t.observations) points.push_back({o.frame, o.pixel.u, o.pixel.v, o.visible ? 1 : 0});
    doc["tracks"].push_back({{"id", t.id}, {"points", points}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump() << '\n';
}

const FramePose* FramePoses::find(int frame_id) const {
  for (const auto& f : frames)
    if (f.frame_id == frame_id) return &f;
  return nullptr;
}

std::vector<int> FramePoses::flagged_frames() const {
  std::vector<int> out;
  for (const auto& f : frames)
    if (f.flagged) out.push_back(f.frame_id);
  return out;
}

std::vector<Pixel> sample_static_points(const StaticMask& mask, int count, std::uint64_t seed,
                                        double min_separation) {
  if (count < 0) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 0");
  std::vector<int> candidates;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      if (mask.at(c, r)) candidates.push_back(r * mask.width() + c);

  Rng rng(seed);
  for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[rng.below(i)]);

  const double min_sq = min_separation * min_separation;
  std::vector<Pixel> picked;
  for (int idx : candidates) {
    if (static_cast<int>(picked.size()) == count) break;
    const Pixel p{static_cast<double>(idx % mask.width()), static_cast<double>(idx / mask.width())};
    const bool far = std::all_of(picked.begin(), picked.end(), [&](const Pixel& q) {
      const double du = p.u - q.u, dv = p.v - q.v;
      return du * du + dv * dv >= min_sq;
    });
    if (far) picked.push_back(p);
  }
  if (static_cast<int>(picked.size()) < count)
    throw Error(ErrorKind::InsufficientStaticArea, "static mask admits only " + std::to_string(picked.size()) +
                                                       " of " + std::to_string(count) + " separated samples");
  return picked;
}

namespace {

std::optional<Point3> lift_exact(const Pixel& p, const DepthMap& depth, const CameraIntrinsics& k) {
  if (!k.contains(p)) return std::nullopt;
  const int col = std::clamp(static_cast<int>(std::lround(p.u)), 0, depth.width() - 1);
  const int row = std::clamp(static_cast<int>(std::lround(p.v)), 0, depth.height() - 1);
  const double d = depth.at(col, row);
  if (!(d > 0.0)) return std::nullopt;
  return unproject(p, d, k);
}

struct FrameEstimate {
  std::optional<RobustFit> fit;
  std::exception_ptr error;
};

}  // namespace

FramePoses estimate_frame_poses(const TrackSet& tracks, std::span<const int> frame_ids,
                                std::span<const DepthMap> depths, const CameraIntrinsics& intrinsics,
                                const StabilizationParams& params) {
  if (frame_ids.empty()) throw Error(ErrorKind::InvalidArgument, "stabilization: no frames");
  if (frame_ids.size() != depths.size())
    throw Error(ErrorKind::LengthMismatch, "stabilization: one depth map per frame required");
  for (const auto& d : depths) {
    if (d.width() != intrinsics.width || d.height() != intrinsics.height)
      throw Error(ErrorKind::InvalidArgument, "stabilization: depth map size does not match intrinsics");
  }

  const int first = frame_ids[0];
  std::vector<std::optional<Point3>> anchors(tracks.tracks.size());
  int anchor_count = 0;
  for (std::size_t p = 0; p < tracks.tracks.size(); ++p) {
    if (auto px = tracks.tracks[p].at(first)) anchors[p] = lift_exact(*px, depths[0], intrinsics);
    anchor_count += anchors[p] ? 1 : 0;
  }
  if (anchor_count < 3)
    throw Error(ErrorKind::UnstabilizableClip, "stabilization: first frame " + std::to_string(first) + " has " +
                                                   std::to_string(anchor_count) + " usable tracks, need 3");

  const auto n = static_cast<std::ptrdiff_t>(frame_ids.size());
  std::vector<FrameEstimate> estimates(frame_ids.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 1; i < n; ++i) {
    try {
      std::vector<Point3> here;
      std::vector<Point3> there;
      for (std::size_t p = 0; p < tracks.tracks.size(); ++p) {
        if (!anchors[p]) continue;
        const auto px = tracks.tracks[p].at(frame_ids[i]);
        if (!px) continue;
        if (auto q = lift_exact(*px, depths[i], intrinsics)) {
          here.push_back(*q);
          there.push_back(*anchors[p]);
        }
      }
      if (here.size() >= 3)
        estimates[i].fit = robust_rigid_transform(here, there, params.ransac,
                                                  derive_seed(params.seed, static_cast<std::uint64_t>(frame_ids[i])));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoConsensus) estimates[i].error = std::current_exception();
    } catch (...) {
      estimates[i].error = std::current_exception();
    }
  }

  FramePoses poses;
  poses.frames.push_back({first, RigidTransform::identity(), false, anchor_count});
  for (std::ptrdiff_t i = 1; i < n; ++i) {
    if (estimates[i].error) std::rethrow_exception(estimates[i].error);
    FramePose pose{frame_ids[i], poses.frames.back().to_first, true, 0};
    if (estimates[i].fit) {
      pose.to_first = estimates[i].fit->transform;
      pose.flagged = false;
      pose.inliers = estimates[i].fit->inlier_count;
    }
    poses.frames.push_back(pose);
  }
  return poses;
}

std::vector<Point3> reexpress_in_frame1(const FramePoses& poses, int frame_id,
                                        std::span<const Point3> points) {
  const FramePose* pose = poses.find(frame_id);
  if (!pose) throw Error(ErrorKind::UnknownFrame, "no pose for frame " + std::to_string(frame_id));
  return transform_points(pose->to_first, points);
}

}  // namespace rx
