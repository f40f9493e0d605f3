#include "segloc/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Geometry>

#include "segloc/errors.hpp"

namespace segloc {
namespace {

constexpr std::array<const char*, 13> kTraverseColumns = {
    "frame", "mission_time_s", "px",    "py",    "pz",    "qw",        "qx",
    "qy",    "qz",             "det_x", "det_y", "det_z", "det_size_m"};

constexpr const char* kMapHeader = "x,y,z,size_m,observation_count";

std::string format_g9(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, std::size_t line_number,
                    const char* what) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || field.empty()) {
    throw MalformedRow(std::string("cannot parse ") + what + " from '" +
                           field + "'",
                       line_number);
  }
  return value;
}

long parse_long(const std::string& field, std::size_t line_number,
                const char* what) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const long value = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || field.empty()) {
    throw MalformedRow(std::string("cannot parse ") + what + " from '" +
                           field + "'",
                       line_number);
  }
  return value;
}

// Canonical sign: first nonzero of (w, x, y, z) is positive.
void canonicalize_sign(std::array<double, 4>& q) {
  for (const double component : q) {
    if (component != 0.0) {
      if (component < 0.0) {
        for (double& c : q) {
          c = -c;
        }
      }
      return;
    }
  }
}

// Nine-significant-digit quaternion strings chosen so that parsing,
// renormalizing, and reformatting reproduces the same strings. Plain
// rounding is not enough: renormalization after parsing can perturb the
// ninth digit, so the rounding is iterated to a fixed point (or, on a closed
// orbit, to its lexicographically smallest member, which is entry-invariant).
std::array<std::string, 4> stable_quaternion_strings(
    const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q(rotation);
  std::array<double, 4> values = {q.w(), q.x(), q.y(), q.z()};
  canonicalize_sign(values);

  auto round9 = [](const std::array<double, 4>& v) {
    return std::array<std::string, 4>{format_g9(v[0]), format_g9(v[1]),
                                      format_g9(v[2]), format_g9(v[3])};
  };
  auto reparse_normalized = [](const std::array<std::string, 4>& s) {
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i) {
      v[i] = std::strtod(s[i].c_str(), nullptr);
    }
    const double norm =
        std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    for (double& c : v) {
      c /= norm;
    }
    canonicalize_sign(v);
    return v;
  };

  std::vector<std::array<std::string, 4>> visited;
  std::array<std::string, 4> current = round9(values);
  for (int iter = 0; iter < 16; ++iter) {
    const auto seen =
        std::find(visited.begin(), visited.end(), current);
    if (seen != visited.end()) {
      return *std::min_element(seen, visited.end());
    }
    visited.push_back(current);
    current = round9(reparse_normalized(current));
  }
  return current;
}

struct ColumnIndices {
  std::array<int, 13> at;  // position of each canonical column in the file
  std::size_t field_count;
};

ColumnIndices resolve_header(const std::string& header_line,
                             const ColumnMapping& mapping) {
  const std::vector<std::string> fields = split_csv(header_line);
  ColumnIndices indices{};
  indices.field_count = fields.size();
  for (int c = 0; c < 13; ++c) {
    const std::string canonical = kTraverseColumns[c];
    const auto renamed = mapping.source_names.find(canonical);
    const std::string& wanted =
        renamed == mapping.source_names.end() ? canonical : renamed->second;
    const auto found = std::find(fields.begin(), fields.end(), wanted);
    if (found == fields.end()) {
      throw MalformedHeader("traverse header is missing column '" + wanted +
                            "'");
    }
    indices.at[c] = static_cast<int>(found - fields.begin());
  }
  if (mapping.source_names.empty() && fields.size() != 13) {
    throw MalformedHeader("canonical traverse header must have 13 columns, "
                          "found " +
                          std::to_string(fields.size()));
  }
  return indices;
}

}  // namespace

ColumnMapping ColumnMapping::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open column mapping file: " + path.string());
  }
  ColumnMapping mapping;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("column mapping line " + std::to_string(line_number) +
                    " is not 'canonical=source': '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(kTraverseColumns.begin(), kTraverseColumns.end(), key) ==
        kTraverseColumns.end()) {
      throw IoError("column mapping line " + std::to_string(line_number) +
                    ": unknown canonical column '" + key + "'");
    }
    if (value.empty()) {
      throw IoError("column mapping line " + std::to_string(line_number) +
                    ": empty source column for '" + key + "'");
    }
    if (!mapping.source_names.emplace(key, value).second) {
      throw IoError("column mapping line " + std::to_string(line_number) +
                    ": duplicate key '" + key + "'");
    }
  }
  return mapping;
}

Traverse load_traverse(const std::filesystem::path& path,
                       const ColumnMapping& mapping,
                       std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open traverse file: " + path.string());
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw MalformedHeader("traverse file is empty: " + path.string());
  }
  const ColumnIndices columns = resolve_header(header_line, mapping);

  Traverse records;
  std::string line;
  std::size_t line_number = 1;
  // Raw pose fields of the record being assembled, for consistency checks
  // across rows of the same frame.
  std::array<double, 8> current_pose_raw{};
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != columns.field_count) {
      throw MalformedRow("expected " + std::to_string(columns.field_count) +
                             " fields, found " + std::to_string(fields.size()),
                         line_number);
    }
    auto field = [&](int canonical_index) -> const std::string& {
      return fields[columns.at[canonical_index]];
    };

    const long frame = parse_long(field(0), line_number, "frame");
    std::array<double, 8> pose_raw{};
    pose_raw[0] = parse_double(field(1), line_number, "mission_time_s");
    for (int i = 0; i < 7; ++i) {
      pose_raw[i + 1] =
          parse_double(field(2 + i), line_number, kTraverseColumns[2 + i]);
    }
    for (const double v : pose_raw) {
      if (!std::isfinite(v)) {
        throw MalformedRow("pose fields must be finite", line_number);
      }
    }

    const bool new_frame =
        records.empty() || records.back().frame_index != frame;
    if (new_frame) {
      if (!records.empty()) {
        if (frame <= records.back().frame_index) {
          throw NonMonotonicFrames(
              "frame " + std::to_string(frame) + " at line " +
              std::to_string(line_number) + " does not increase (previous " +
              std::to_string(records.back().frame_index) + ")");
        }
        if (pose_raw[0] < records.back().mission_time_s) {
          throw NonMonotonicFrames(
              "mission_time_s decreases at line " +
              std::to_string(line_number));
        }
      }
      const Eigen::Quaterniond q(pose_raw[4], pose_raw[5], pose_raw[6],
                                 pose_raw[7]);
      const double norm = q.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw MalformedRow("quaternion has invalid norm", line_number);
      }
      if (std::abs(norm - 1.0) > 1e-6 && warnings != nullptr) {
        warnings->push_back("line " + std::to_string(line_number) +
                            ": quaternion norm " + format_g9(norm) +
                            " renormalized");
      }
      TraverseRecord record;
      record.frame_index = static_cast<int>(frame);
      record.mission_time_s = pose_raw[0];
      record.rover_pose.rotation = q.normalized().toRotationMatrix();
      record.rover_pose.translation =
          Eigen::Vector3d(pose_raw[1], pose_raw[2], pose_raw[3]);
      records.push_back(std::move(record));
      current_pose_raw = pose_raw;
    } else if (pose_raw != current_pose_raw) {
      throw MalformedRow("pose changed within frame " + std::to_string(frame),
                         line_number);
    }

    const std::array<const std::string*, 4> det = {
        &field(9), &field(10), &field(11), &field(12)};
    const int empty_count =
        static_cast<int>(std::count_if(det.begin(), det.end(),
                                       [](const std::string* f) {
                                         return f->empty();
                                       }));
    if (empty_count == 4) {
      continue;  // pose-only row
    }
    if (empty_count != 0) {
      throw MalformedRow("detection fields must be all present or all empty",
                         line_number);
    }
    RoverFrameDetection detection;
    detection.position =
        Point3(parse_double(*det[0], line_number, "det_x"),
               parse_double(*det[1], line_number, "det_y"),
               parse_double(*det[2], line_number, "det_z"));
    detection.size_m = parse_double(*det[3], line_number, "det_size_m");
    if (!detection.position.allFinite() || !(detection.size_m > 0.0)) {
      throw MalformedRow("detection must be finite with positive size",
                         line_number);
    }
    records.back().detections.push_back(std::move(detection));
  }
  return records;
}

void save_traverse(const Traverse& records,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open traverse file for writing: " + path.string());
  }
  for (std::size_t c = 0; c < kTraverseColumns.size(); ++c) {
    out << (c == 0 ? "" : ",") << kTraverseColumns[c];
  }
  out << '\n';
  for (const TraverseRecord& record : records) {
    if (!record.rover_pose.translation.allFinite() ||
        !std::isfinite(record.mission_time_s)) {
      throw std::invalid_argument("traverse pose must be finite");
    }
    std::ostringstream prefix;
    const std::array<std::string, 4> q =
        stable_quaternion_strings(record.rover_pose.rotation);
    prefix << record.frame_index << ',' << format_g9(record.mission_time_s)
           << ',' << format_g9(record.rover_pose.translation.x()) << ','
           << format_g9(record.rover_pose.translation.y()) << ','
           << format_g9(record.rover_pose.translation.z()) << ',' << q[0]
           << ',' << q[1] << ',' << q[2] << ',' << q[3];
    if (record.detections.empty()) {
      out << prefix.str() << ",,,,\n";
      continue;
    }
    for (const RoverFrameDetection& det : record.detections) {
      if (!det.position.allFinite() || !(det.size_m > 0.0)) {
        throw std::invalid_argument(
            "detections must be finite with positive size");
      }
      out << prefix.str() << ',' << format_g9(det.position.x()) << ','
          << format_g9(det.position.y()) << ',' << format_g9(det.position.z())
          << ',' << format_g9(det.size_m) << '\n';
    }
  }
  if (!out) {
    throw IoError("failed writing traverse file: " + path.string());
  }
}

ObjectMap load_map(const std::filesystem::path& path, std::string frame_name) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open map file: " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw MalformedHeader("map file is empty: " + path.string());
  }
  if (header != kMapHeader) {
    throw MalformedHeader("map header must be '" + std::string(kMapHeader) +
                          "', found '" + header + "'");
  }
  ObjectMap map;
  map.frame_name = std::move(frame_name);
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 5) {
      throw MalformedRow("expected 5 fields, found " +
                             std::to_string(fields.size()),
                         line_number);
    }
    Landmark lm;
    lm.position = Point3(parse_double(fields[0], line_number, "x"),
                         parse_double(fields[1], line_number, "y"),
                         parse_double(fields[2], line_number, "z"));
    lm.size_m = parse_double(fields[3], line_number, "size_m");
    lm.observation_count = static_cast<int>(
        parse_long(fields[4], line_number, "observation_count"));
    if (!lm.position.allFinite() || !(lm.size_m > 0.0) ||
        lm.observation_count < 1) {
      throw MalformedRow("landmark fields out of range", line_number);
    }
    map.landmarks.push_back(std::move(lm));
  }
  return map;
}

void save_map(const ObjectMap& map, const std::filesystem::path& path) {
  validate(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open map file for writing: " + path.string());
  }
  out << kMapHeader << '\n';
  for (const Landmark& lm : map.landmarks) {
    out << format_g9(lm.position.x()) << ',' << format_g9(lm.position.y())
        << ',' << format_g9(lm.position.z()) << ',' << format_g9(lm.size_m)
        << ',' << lm.observation_count << '\n';
  }
  if (!out) {
    throw IoError("failed writing map file: " + path.string());
  }
}

PlaybackStream::PlaybackStream(const Traverse& records, std::size_t begin,
                               std::size_t end)
    : records_(&records), next_(begin), end_(end) {
  if (begin > end || end > records.size()) {
    throw RangeOutOfBounds("playback range [" + std::to_string(begin) + ", " +
                           std::to_string(end) + ") exceeds " +
                           std::to_string(records.size()) + " records");
  }
}

const TraverseRecord& PlaybackStream::next() {
  if (!has_next()) {
    throw RangeOutOfBounds("playback stream exhausted");
  }
  return (*records_)[next_++];
}

PlaybackStream playback(const Traverse& records) {
  return PlaybackStream(records, 0, records.size());
}

PlaybackStream playback(const Traverse& records, std::size_t begin,
                        std::size_t end) {
  return PlaybackStream(records, begin, end);
}

std::vector<DualPlaybackEvent> dual_playback(const Traverse& a,
                                             const Traverse& b) {
  std::vector<DualPlaybackEvent> merged;
  merged.reserve(a.size() + b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < a.size() || ib < b.size()) {
    const bool take_a =
        ib == b.size() ||
        (ia < a.size() && a[ia].mission_time_s <= b[ib].mission_time_s);
    if (take_a) {
      merged.push_back(DualPlaybackEvent{0, &a[ia++]});
    } else {
      merged.push_back(DualPlaybackEvent{1, &b[ib++]});
    }
  }
  return merged;
}

ObjectMap accumulate_traverse(const Traverse& records,
                              std::string frame_name) {
  ObjectMap map;
  map.frame_name = std::move(frame_name);
  for (const TraverseRecord& record : records) {
    map = accumulate(std::move(map), record.rover_pose, record.detections);
  }
  return map;
}

}  // namespace segloc
