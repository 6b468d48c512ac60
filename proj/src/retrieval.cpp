#include "rx/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>

#include "rx/error.hpp"

namespace rx {

using nlohmann::json;

bool Recording::is_view() const {
  for (std::size_t i = 0; i < original_index.size(); ++i)
    if (original_index[i] != static_cast<int>(i)) return true;
  return false;
}

double Recording::to_original_time(double t) const {
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "time map: empty recording");
  if (t < 0.0 || t > duration()) throw Error(ErrorKind::OutOfBounds, "time map: time outside the recording");
  const double pos = t * fps;
  int i = static_cast<int>(std::floor(pos));
  if (i >= frame_count()) i = frame_count() - 1;
  const double frac = pos - i;
  return (original_index[i] + frac) / fps;
}

std::optional<double> Recording::to_filtered_time(double t) const {
  const double pos = t * fps;
  const int frame = static_cast<int>(std::floor(pos));
  const double frac = pos - frame;
  auto it = std::lower_bound(original_index.begin(), original_index.end(), frame);
  if (it != original_index.end() && *it == frame)
    return (static_cast<double>(it - original_index.begin()) + frac) / fps;
  // The end of the last kept frame maps to the end of the view.
  if (frac == 0.0 && it != original_index.begin() && *(it - 1) == frame - 1)
    return static_cast<double>(it - original_index.begin()) / fps;
  return std::nullopt;
}

ClipSpan make_span(double start_s, double end_s, double fps, int frame_count) {
  ClipSpan s{start_s, end_s, 0, -1};
  s.start_frame = std::max(0, static_cast<int>(std::floor(start_s * fps + 1e-9)));
  s.end_frame = std::min(frame_count - 1, static_cast<int>(std::ceil(end_s * fps - 1e-9)) - 1);
  s.end_frame = std::max(s.end_frame, std::min(s.start_frame, frame_count - 1));
  return s;
}

Command::Command(std::string t) : text(std::move(t)) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }))
    throw Error(ErrorKind::InvalidArgument, "command text must not be empty");
}

HeuristicKind keyword_heuristic(std::string_view command) {
  std::string lower(command);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  auto has = [&](std::string_view word) { return lower.find(word) != std::string::npos; };
  if (has("press") || has("turn on") || has("turn off") || has("switch")) return HeuristicKind::Press;
  if (has("push") || has("close")) return HeuristicKind::Push;
  return HeuristicKind::Grasp;
}

namespace {

std::vector<ClipSpan> spans_from_json(const json& spans) {
  std::vector<ClipSpan> out;
  for (const auto& s : spans) {
    if (!s.is_array() || s.size() != 2) throw Error(ErrorKind::Schema, "span must be [start_s, end_s]");
    out.push_back({s[0].get<double>(), s[1].get<double>(), 0, -1});
  }
  return out;
}

}  // namespace

MockVlmClient::MockVlmClient(json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw Error(ErrorKind::Schema, "mock VLM script must be a JSON object");
  for (const auto& [command, entry] : script_.items()) {
    if (!entry.is_object()) throw Error(ErrorKind::Schema, "mock VLM script entry '" + command + "' must be an object");
    if (entry.contains("spans")) spans_from_json(entry.at("spans"));
    if (entry.contains("heuristic")) parse_heuristic(entry.at("heuristic").get<std::string>());
  }
}

MockVlmClient MockVlmClient::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  try {
    return MockVlmClient(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "mock VLM script " + path.string() + ": " + e.what());
  }
}

std::vector<ClipSpan> MockVlmClient::retrieve(const Recording&, const Command& command) {
  if (!script_.contains(command.text)) return {};
  const auto& entry = script_.at(command.text);
  return entry.contains("spans") ? spans_from_json(entry.at("spans")) : std::vector<ClipSpan>{};
}

HeuristicKind MockVlmClient::classify_heuristic(const Command& command) {
  if (script_.contains(command.text) && script_.at(command.text).contains("heuristic"))
    return parse_heuristic(script_.at(command.text).at("heuristic").get<std::string>());
  return keyword_heuristic(command.text);
}

std::vector<ClipSpan> HttpVlmClient::retrieve(const Recording& recording, const Command& command) {
  json frames = json::array();
  for (std::size_t i = 0; i < recording.frames.size(); ++i)
    frames.push_back({{"t", i}, {"rgb", recording.frames[i].rgb.string()}});
  const json request{{"task", "retrieve_clips"},
                     {"command", command.text},
                     {"recording",
                      {{"id", recording.id},
                       {"fps", recording.fps},
                       {"duration_s", recording.duration()},
                       {"frames", frames}}}};
  const json response = http_.post(request);
  try {
    return spans_from_json(response.at("spans"));
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Transport, std::string("VLM retrieve: unexpected response: ") + e.what());
  }
}

HeuristicKind HttpVlmClient::classify_heuristic(const Command& command) {
  const json request{{"task", "classify_heuristic"},
                     {"command", command.text},
                     {"options", {"grasp", "press", "push"}}};
  const json response = http_.post(request);
  try {
    return parse_heuristic(response.at("heuristic").get<std::string>());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Transport, std::string("VLM classify: unexpected response: ") + e.what());
  }
}

std::vector<ClipSpan> retrieve_clips(VlmClient& client, const Recording& recording, const Command& command) {
  const double duration = recording.duration();
  std::vector<ClipSpan> valid;
  for (const auto& raw : client.retrieve(recording, command)) {
    if (!std::isfinite(raw.start_s) || !std::isfinite(raw.end_s)) continue;
    const double start = std::clamp(raw.start_s, 0.0, duration);
    const double end = std::clamp(raw.end_s, 0.0, duration);
    if (end <= start) continue;
    valid.push_back({start, end, 0, -1});
  }
  std::sort(valid.begin(), valid.end(), [](const ClipSpan& a, const ClipSpan& b) {
    return a.start_s != b.start_s ? a.start_s < b.start_s : a.end_s < b.end_s;
  });
  std::vector<ClipSpan> merged;
  for (const auto& s : valid) {
    if (!merged.empty() && s.start_s < merged.back().end_s) {
      merged.back().end_s = std::max(merged.back().end_s, s.end_s);
    } else {
      merged.push_back(s);
    }
  }
  if (merged.empty())
    throw Error(ErrorKind::EmptyRetrieval, "no valid clips retrieved for command '" + command.text + "'");
  for (auto& s : merged) s = make_span(s.start_s, s.end_s, recording.fps, recording.frame_count());
  return merged;
}

HeuristicKind select_heuristic(VlmClient& client, const Command& command) {
  return client.classify_heuristic(command);
}

RetrievalScore evaluate_retrieval(const std::vector<ClipSpan>& predicted,
                                  const std::vector<ClipSpan>& ground_truth, double tolerance_s) {
  if (!(tolerance_s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be >= 0");
  auto by_start = [](const std::vector<ClipSpan>& v) {
    std::vector<int> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a].start_s < v[b].start_s; });
    return idx;
  };
  const auto pred_order = by_start(predicted);
  const auto gt_order = by_start(ground_truth);
  auto matches = [&](int p, int g) {
    return std::abs(predicted[p].start_s - ground_truth[g].start_s) <= tolerance_s &&
           std::abs(predicted[p].end_s - ground_truth[g].end_s) <= tolerance_s;
  };

  std::vector<int> owner(ground_truth.size(), -1);
  std::vector<char> visited;
  std::function<bool(int)> augment = [&](int p) {
    for (int g : gt_order) {
      if (visited[g] || !matches(p, g)) continue;
      visited[g] = 1;
      if (owner[g] < 0 || augment(owner[g])) {
        owner[g] = p;
        return true;
      }
    }
    return false;
  };
  RetrievalScore score;
  for (int p : pred_order) {
    visited.assign(ground_truth.size(), 0);
    if (augment(p)) ++score.matches;
  }
  if (!predicted.empty()) score.precision = static_cast<double>(score.matches) / predicted.size();
  if (!ground_truth.empty()) score.recall = static_cast<double>(score.matches) / ground_truth.size();
  return score;
}

Recording segment_by_presence(const Recording& recording, const PresenceTimeline& timeline, int min_gap) {
  if (timeline.present.size() != recording.frames.size())
    throw Error(ErrorKind::LengthMismatch, "presence timeline length does not match the recording");
  Recording view = recording;
  view.frames.clear();
  view.original_index.clear();
  for (const auto& interval : filter_hand_frames(timeline, min_gap)) {
    for (int i = interval.first; i <= interval.last; ++i) {
      view.frames.push_back(recording.frames[i]);
      view.original_index.push_back(recording.original_index[i]);
    }
  }
  return view;
}

std::map<std::string, std::vector<ClipSpan>> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  std::map<std::string, std::vector<ClipSpan>> out;
  try {
    const json doc = json::parse(in);
    if (!doc.is_object()) throw Error(ErrorKind::Schema, "annotations must be a JSON object");
    for (const auto& [task, spans] : doc.items()) out[task] = spans_from_json(spans);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, "annotations " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace rx
