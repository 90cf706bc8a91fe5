#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidshield/detection.hpp"
#include "vidshield/error.hpp"

namespace vidshield {

using json = nlohmann::json;

namespace detail {

template <typename Fn>
void for_each_jsonl(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      fn(value, line_no);
    } catch (const json::exception& e) {
      fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  return in;
}

}  // namespace detail

// One {"frame": n, "label": l} object per line; frames start at 0 and are
// contiguous.
inline LabelStream read_label_stream(std::istream& in, const std::string& source = "<labels>") {
  LabelStream stream;
  detail::for_each_jsonl(in, source, [&](const json& obj, int line_no) {
    const int frame = obj.at("frame").get<int>();
    if (frame != stream.frame_count()) {
      fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": expected frame " +
                                      std::to_string(stream.frame_count()) + ", got " + std::to_string(frame));
    }
    stream.labels.push_back(obj.at("label").get<int>());
  });
  if (stream.labels.empty()) fail(Errc::empty_input, source + ": no labels");
  return stream;
}

inline LabelStream read_label_stream(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_label_stream(in, path.string());
}

inline void write_label_stream(std::ostream& out, const LabelStream& stream) {
  for (int n = 0; n < stream.frame_count(); ++n) {
    out << json{{"frame", n}, {"label", stream.labels[static_cast<std::size_t>(n)]}}.dump() << '\n';
  }
}

// {"score": x, "positive": true|false} per line.
inline std::vector<ScoredSample> read_scored_samples(std::istream& in, const std::string& source = "<samples>") {
  std::vector<ScoredSample> samples;
  detail::for_each_jsonl(in, source, [&](const json& obj, int) {
    samples.push_back({obj.at("score").get<double>(), obj.at("positive").get<bool>()});
  });
  return samples;
}

inline std::vector<ScoredSample> read_scored_samples(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_scored_samples(in, path.string());
}

inline json to_json(const CalibrationTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"threshold", r.threshold}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
  }
  return {{"rows", rows}};
}

inline json to_json(const RocCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) points.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}});
  return {{"points", points}, {"auc", curve.auc}};
}

inline json to_json(const DetectionVerdict& verdict) {
  return {{"alpha", verdict.alpha}, {"verdict", std::string(to_string(verdict.kind))}};
}

inline json to_json(const DetectionThresholds& t) { return {{"gamma1", t.gamma1}, {"gamma2", t.gamma2}}; }

}  // namespace vidshield
