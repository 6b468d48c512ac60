#include "rx/context.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "rx/error.hpp"
#include "rx/random.hpp"

namespace rx {

using nlohmann::json;

std::int64_t quantize(double value, double quantum) {
  const double scaled = std::round(value / quantum);
  if (!std::isfinite(scaled) || std::abs(scaled) > 9e15)
    throw Error(ErrorKind::InvalidArgument, "quantize: value out of range");
  return static_cast<std::int64_t>(scaled);
}

namespace {

void append_triple(std::string& out, const Point3& p, double q) {
  out += std::to_string(quantize(p.x(), q));
  out += ',';
  out += std::to_string(quantize(p.y(), q));
  out += ',';
  out += std::to_string(quantize(p.z(), q));
}

void append_points(std::string& out, std::span<const Point3> points, double q) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += ' ';
    append_triple(out, points[i], q);
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Cursor {
 public:
  explicit Cursor(std::string_view text) : s_(text) {}

  std::size_t pos() const { return pos_; }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  std::string_view rest() const { return s_.substr(pos_); }

  [[noreturn]] void fail(const std::string& what, ErrorKind kind = ErrorKind::MalformedOutput) const {
    throw ParseError(kind, what, pos_);
  }

  bool try_consume(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) return false;
    pos_ += lit.size();
    return true;
  }
  void expect(std::string_view lit) {
    if (!try_consume(lit)) fail("expected '" + std::string(lit) + "'");
  }
  void expect_line_end() {
    try_consume("\r");
    if (!eof() && !try_consume("\n")) fail("expected end of line");
  }
  bool at_line_end() const { return eof() || peek() == '\n' || peek() == '\r'; }

  std::int64_t integer() {
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    const std::size_t digits = pos_;
    while (!eof() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected an integer");
    }
    if (pos_ - digits > 16) {
      pos_ = start;
      fail("integer too long");
    }
    std::int64_t v = 0;
    std::from_chars(s_.data() + start, s_.data() + pos_, v);
    return v;
  }

  double real() {
    const std::size_t start = pos_;
    while (!eof() && s_[pos_] != ' ' && s_[pos_] != '\n' && s_[pos_] != '\r') ++pos_;
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_) {
      pos_ = start;
      fail("expected a real number");
    }
    return v;
  }

  std::string word() {
    const std::size_t start = pos_;
    while (!eof() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  Point3 triple(double q) {
    const double x = static_cast<double>(integer()) * q;
    expect(",");
    const double y = static_cast<double>(integer()) * q;
    expect(",");
    const double z = static_cast<double>(integer()) * q;
    return {x, y, z};
  }

  /// Space-separated triples up to the end of the line (newline consumed).
  std::vector<Point3> triples_line(double q) {
    std::vector<Point3> out;
    while (true) {
      out.push_back(triple(q));
      while (peek() == ' ' || peek() == '\t') ++pos_;
      if (at_line_end()) break;
    }
    expect_line_end();
    return out;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

Point3 centroid(std::span<const Point3> points) {
  Point3 c = Point3::Zero();
  for (const auto& p : points) c += p;
  return points.empty() ? c : Point3(c / static_cast<double>(points.size()));
}

void check_context(std::span<const ContextExample> examples, const KeypointSet& live) {
  if (examples.empty()) throw Error(ErrorKind::EmptyContext, "context has no examples");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].keypoints.size() != live.size())
      throw Error(ErrorKind::KMismatch, "example " + std::to_string(i) + " has K=" +
                                            std::to_string(examples[i].keypoints.size()) + ", live has K=" +
                                            std::to_string(live.size()));
  }
}

}  // namespace

SerializedPrompt serialize_context(std::span<const ContextExample> examples, const KeypointSet& live,
                                   double quantum) {
  if (!(quantum > 0.0)) throw Error(ErrorKind::InvalidArgument, "quantum must be positive");
  check_context(examples, live);
  const JointLayout layout = examples.front().trajectory.layout;
  const int joints = joint_count(layout);
  for (const auto& e : examples) {
    if (e.trajectory.layout != layout)
      throw Error(ErrorKind::InvalidArgument, "context examples use different joint layouts");
    if (e.trajectory.frames.empty()) throw Error(ErrorKind::InvalidArgument, "context example has an empty trajectory");
    for (const auto& f : e.trajectory.frames)
      if (static_cast<int>(f.joints.size()) != joints)
        throw Error(ErrorKind::WrongArity, "trajectory frame does not match its joint layout");
  }

  SerializedPrompt prompt;
  prompt.k = live.size();
  prompt.z = static_cast<int>(examples.size());
  prompt.joints = joints;
  prompt.quantum = quantum;
  prompt.layout = layout;

  std::string& out = prompt.text;
  out += "RXCTX 1\n";
  out += "K " + std::to_string(prompt.k) + " Z " + std::to_string(prompt.z) + " J " + std::to_string(joints) +
         " Q " + format_real(quantum) + " LAYOUT " + std::string(to_string(layout)) + "\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out += "EXAMPLE " + std::to_string(i + 1) + "\nKEYPOINTS ";
    append_points(out, examples[i].keypoints.points, quantum);
    out += "\nTRAJECTORY\n";
    for (const auto& f : examples[i].trajectory.frames) {
      append_points(out, f.joints, quantum);
      out += '\n';
    }
    out += "END\n";
    prompt.lengths.push_back(examples[i].trajectory.size());
  }
  out += "LIVE\nKEYPOINTS ";
  append_points(out, live.points, quantum);
  out += "\nTRAJECTORY\n";
  return prompt;
}

ParsedPrompt parse_prompt(std::string_view text) {
  Cursor c(text);
  ParsedPrompt parsed;
  c.expect("RXCTX 1");
  c.expect_line_end();
  c.expect("K ");
  const auto k = c.integer();
  c.expect(" Z ");
  const auto z = c.integer();
  c.expect(" J ");
  const auto j = c.integer();
  c.expect(" Q ");
  parsed.quantum = c.real();
  c.expect(" LAYOUT ");
  try {
    parsed.layout = parse_layout(c.word());
  } catch (const Error&) {
    c.fail("unknown layout");
  }
  c.expect_line_end();
  if (k < 1 || z < 1 || j != joint_count(parsed.layout) || !(parsed.quantum > 0.0)) c.fail("inconsistent header");

  auto keypoints = [&]() {
    c.expect("KEYPOINTS ");
    auto pts = c.triples_line(parsed.quantum);
    if (static_cast<std::int64_t>(pts.size()) != k) c.fail("keypoint count differs from K", ErrorKind::WrongArity);
    return pts;
  };

  for (std::int64_t e = 0; e < z; ++e) {
    c.expect("EXAMPLE " + std::to_string(e + 1));
    c.expect_line_end();
    ContextExample ex;
    ex.keypoints.points = keypoints();
    ex.trajectory.layout = parsed.layout;
    ex.trajectory.clip_id = static_cast<int>(e);
    c.expect("TRAJECTORY");
    c.expect_line_end();
    int t = 0;
    while (!c.try_consume("END")) {
      const std::size_t start = c.pos();
      auto joints = c.triples_line(parsed.quantum);
      if (static_cast<std::int64_t>(joints.size()) != j)
        throw ParseError(ErrorKind::WrongArity, "frame has " + std::to_string(joints.size()) + " joints", start);
      ex.trajectory.frames.push_back({t++, std::move(joints)});
    }
    c.expect_line_end();
    parsed.examples.push_back(std::move(ex));
  }
  c.expect("LIVE");
  c.expect_line_end();
  parsed.live.points = keypoints();
  c.expect("TRAJECTORY");
  c.expect_line_end();
  return parsed;
}

std::string serialize_trajectory(const HandTrajectory& trajectory, double quantum) {
  std::string out;
  for (const auto& f : trajectory.frames) {
    append_points(out, f.joints, quantum);
    out += '\n';
  }
  out += "END\n";
  return out;
}

ParsedTrajectory parse_trajectory(std::string_view raw, int expected_joints, double quantum, JointLayout layout) {
  if (expected_joints < 1) throw Error(ErrorKind::InvalidArgument, "expected_joints must be >= 1");
  if (!(quantum > 0.0)) throw Error(ErrorKind::InvalidArgument, "quantum must be positive");
  Cursor c(raw);
  ParsedTrajectory out;
  out.trajectory.layout = layout;
  auto skip_blank = [&]() {
    while (!c.eof() && std::isspace(static_cast<unsigned char>(c.peek()))) c.try_consume(std::string_view(&raw[c.pos()], 1));
  };
  skip_blank();
  while (!c.eof()) {
    const std::size_t start = c.pos();
    if (c.try_consume("END")) {
      if (out.trajectory.frames.empty()) throw ParseError(ErrorKind::MalformedOutput, "END before any frame", start);
      skip_blank();
      if (!c.eof()) out.warnings.push_back("ignored trailing text after END at byte " + std::to_string(c.pos()));
      break;
    }
    const char first = c.peek();
    if (first != '-' && !std::isdigit(static_cast<unsigned char>(first))) {
      if (out.trajectory.frames.empty()) c.fail("expected a joint triple");
      out.warnings.push_back("ignored trailing text at byte " + std::to_string(start));
      break;
    }
    auto joints = c.triples_line(quantum);
    if (static_cast<int>(joints.size()) != expected_joints)
      throw ParseError(ErrorKind::WrongArity,
                       "frame " + std::to_string(out.trajectory.frames.size()) + " has " +
                           std::to_string(joints.size()) + " joints, expected " + std::to_string(expected_joints),
                       start);
    out.trajectory.frames.push_back({static_cast<int>(out.trajectory.frames.size()), std::move(joints)});
    skip_blank();
  }
  if (out.trajectory.frames.empty()) throw ParseError(ErrorKind::MalformedOutput, "no trajectory frames", c.pos());
  return out;
}

ContextExample augment(const ContextExample& example, std::uint64_t seed, double translation_range,
                       double rotation_range) {
  if (!(translation_range >= 0.0) || !(rotation_range >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "augmentation ranges must be >= 0");
  Rng rng(seed);
  const Point3 t(rng.uniform(-translation_range, translation_range), rng.uniform(-translation_range, translation_range),
                 rng.uniform(-translation_range, translation_range));
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Point3 axis(r * std::cos(phi), r * std::sin(phi), z);
  const double angle = rng.uniform(-rotation_range, rotation_range);
  const RigidTransform g = RigidTransform::from_axis_angle(axis, angle, t);

  ContextExample out = example;
  out.keypoints.points = transform_points(g, example.keypoints.points);
  out.trajectory = transform_trajectory(g, example.trajectory);
  return out;
}

HandTrajectory NormalizedContext::denormalize(const HandTrajectory& trajectory) const {
  return transform_trajectory(RigidTransform::translation_only(live_centroid), trajectory);
}

NormalizedContext normalize_frame(std::span<const ContextExample> examples, const KeypointSet& live) {
  if (live.size() < 1) throw Error(ErrorKind::InvalidArgument, "normalize: live keypoint set is empty");
  NormalizedContext out;
  for (const auto& e : examples) {
    if (e.keypoints.size() < 1) throw Error(ErrorKind::InvalidArgument, "normalize: example keypoint set is empty");
    const auto shift = RigidTransform::translation_only(-centroid(e.keypoints.points));
    ContextExample n = e;
    n.keypoints.points = transform_points(shift, e.keypoints.points);
    n.trajectory = transform_trajectory(shift, e.trajectory);
    out.examples.push_back(std::move(n));
  }
  out.live_centroid = centroid(live.points);
  out.live = live;
  out.live.points = transform_points(RigidTransform::translation_only(-out.live_centroid), live.points);
  return out;
}

WarpResult nearest_context_warp(std::span<const ContextExample> examples, const KeypointSet& live) {
  check_context(examples, live);
  if (live.size() < 3 || affine_rank(live.points) < 2)
    throw Error(ErrorKind::DegenerateKeypoints, "live keypoints are collinear or fewer than 3");
  WarpResult best;
  bool found = false;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    RigidTransform fit;
    try {
      fit = estimate_rigid_transform(examples[i].keypoints.points, live.points);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DegenerateConfiguration)
        throw Error(ErrorKind::DegenerateKeypoints, "example " + std::to_string(i) + " keypoints are degenerate");
      throw;
    }
    const double rms = rms_residual(fit, examples[i].keypoints.points, live.points);
    if (!found || rms < best.residual_rms) {
      found = true;
      best.example_index = static_cast<int>(i);
      best.residual_rms = rms;
      best.transform = fit;
    }
  }
  best.trajectory = transform_trajectory(best.transform, examples[best.example_index].trajectory);
  return best;
}

std::string BaselineBackend::complete(const SerializedPrompt& prompt) {
  const ParsedPrompt parsed = parse_prompt(prompt.text);
  const auto warp = nearest_context_warp(parsed.examples, parsed.live);
  return serialize_trajectory(warp.trajectory, parsed.quantum);
}

std::string HttpLlmBackend::complete(const SerializedPrompt& prompt) {
  const json response = http_.post({{"prompt", prompt.text}, {"max_tokens", max_tokens_}});
  try {
    return response.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Transport, std::string("LLM backend: unexpected response: ") + e.what());
  }
}

GenerationResult generate_trajectory(SequenceBackend& backend, std::span<const ContextExample> examples,
                                     const KeypointSet& live, const GenerationConfig& config) {
  check_context(examples, live);
  if (config.max_steps < 2) throw Error(ErrorKind::InvalidArgument, "max_steps must be >= 2");

  std::vector<ContextExample> context(examples.begin(), examples.end());
  if (config.context_budget > 0 && static_cast<int>(context.size()) > config.context_budget)
    context.resize(static_cast<std::size_t>(config.context_budget));
  for (auto& e : context)
    if (e.trajectory.size() > config.max_steps) e.trajectory = resample_trajectory(e.trajectory, config.max_steps);
  if (config.augment_copies > 0) {
    const std::size_t base = context.size();
    for (std::size_t i = 0; i < base; ++i)
      for (int c = 0; c < config.augment_copies; ++c)
        context.push_back(augment(context[i], derive_seed(config.seed, i * 1000003u + c), config.augment_translation,
                                  config.augment_rotation));
  }

  GenerationResult result;
  result.backend = backend.name();
  try {
    result.residual_rms = nearest_context_warp(context, live).residual_rms;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateKeypoints) throw;
  }

  const NormalizedContext normalized = normalize_frame(context, live);
  const SerializedPrompt prompt = serialize_context(normalized.examples, normalized.live, config.quantum);
  const int joints = prompt.joints;

  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    ++result.attempts;
    const std::string raw = backend.complete(prompt);
    try {
      auto parsed = parse_trajectory(raw, joints, config.quantum, prompt.layout);
      for (auto& w : parsed.warnings) result.warnings.push_back(std::move(w));
      HandTrajectory traj = normalized.denormalize(parsed.trajectory);
      if (traj.size() > config.max_steps) {
        result.warnings.push_back("truncated generated trajectory from " + std::to_string(traj.size()) + " to " +
                                  std::to_string(config.max_steps) + " steps");
        traj.frames.resize(static_cast<std::size_t>(config.max_steps));
      }
      result.trajectory = std::move(traj);
      return result;
    } catch (const ParseError& e) {
      result.warnings.push_back(std::string("attempt ") + std::to_string(attempt + 1) + ": " + e.what());
    }
  }

  try {
    auto warp = nearest_context_warp(context, live);
    result.trajectory = std::move(warp.trajectory);
    result.residual_rms = warp.residual_rms;
  } catch (const Error& e) {
    throw Error(ErrorKind::GenerationFailed, std::string("backend output unusable and baseline failed: ") + e.what());
  }
  result.fallback_used = true;
  return result;
}

json trajectory_to_json(const GenerationResult& result) {
  json frames = json::array();
  for (const auto& f : result.trajectory.frames) {
    json joints = json::array();
    for (const auto& p : f.joints) joints.push_back({p.x(), p.y(), p.z()});
    frames.push_back({{"t", f.frame_id}, {"joints", joints}});
  }
  json meta{{"fallback_used", result.fallback_used},
            {"backend", result.backend},
            {"residual_rms", result.residual_rms ? json(*result.residual_rms) : json(nullptr)},
            {"layout", to_string(result.trajectory.layout)}};
  return {{"frames", frames}, {"meta", meta}};
}

GenerationResult trajectory_from_json(const json& doc) {
  GenerationResult r;
  try {
    const auto& meta = doc.at("meta");
    r.fallback_used = meta.at("fallback_used").get<bool>();
    r.backend = meta.at("backend").get<std::string>();
    if (!meta.at("residual_rms").is_null()) r.residual_rms = meta.at("residual_rms").get<double>();
    r.trajectory.layout = parse_layout(meta.value("layout", std::string("mano21")));
    for (const auto& f : doc.at("frames")) {
      JointFrame frame{f.at("t").get<int>(), {}};
      for (const auto& p : f.at("joints")) frame.joints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      r.trajectory.frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("trajectory JSON: ") + e.what());
  }
  return r;
}

}  // namespace rx
