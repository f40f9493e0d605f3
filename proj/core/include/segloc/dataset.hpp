#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "segloc/geometry.hpp"
#include "segloc/mapping.hpp"
#include "segloc/mask_pipeline.hpp"

namespace segloc {

/// One frame of a recorded traverse: the rover's world-frame pose and the
/// rover-frame object detections made in that frame.
struct TraverseRecord {
  int frame_index = 0;
  double mission_time_s = 0.0;
  RigidTransform rover_pose;
  std::vector<RoverFrameDetection> detections;
};

using Traverse = std::vector<TraverseRecord>;

/// Renames canonical traverse CSV columns to the column names found in an
/// externally produced file, so foreign schemas are adapted at load time
/// without touching the canonical writer.
struct ColumnMapping {
  /// canonical column name -> name used in the source file.
  std::map<std::string, std::string> source_names;

  /// Parses `canonical=source` lines; '#' starts a comment, blank lines are
  /// ignored, keys must be canonical column names. Throws IoError.
  static ColumnMapping load(const std::filesystem::path& path);
};

/// Loads a traverse CSV. The canonical schema is
///   frame,mission_time_s,px,py,pz,qw,qx,qy,qz,det_x,det_y,det_z,det_size_m
/// with one row per detection, the pose repeated on each row, and all four
/// detection fields empty for frames without detections. A ColumnMapping
/// permits foreign column names and orders. Quaternions are normalized on
/// ingest; deviations beyond 1e-6 are reported through `warnings` when given.
/// Throws MalformedHeader, MalformedRow, NonMonotonicFrames, IoError.
Traverse load_traverse(const std::filesystem::path& path,
                       const ColumnMapping& mapping = {},
                       std::vector<std::string>* warnings = nullptr);

/// Writes the canonical traverse CSV: LF line endings, 9 significant digits,
/// quaternion sign canonicalized. save then load is the identity, and saving
/// a loaded canonical file reproduces it byte for byte. Throws IoError.
void save_traverse(const Traverse& records, const std::filesystem::path& path);

/// Map CSV: header x,y,z,size_m,observation_count, one landmark per row,
/// 9 significant digits. The frame name is not stored in the file; the caller
/// names the loaded map. Throws MalformedHeader, MalformedRow, IoError.
ObjectMap load_map(const std::filesystem::path& path, std::string frame_name);
void save_map(const ObjectMap& map, const std::filesystem::path& path);

/// Forward-only view over a contiguous range of traverse records. The
/// underlying traverse must outlive the stream; one stream per consumer.
class PlaybackStream {
 public:
  /// Half-open range [begin, end). Throws RangeOutOfBounds.
  PlaybackStream(const Traverse& records, std::size_t begin, std::size_t end);

  bool has_next() const { return next_ < end_; }
  const TraverseRecord& next();
  std::size_t remaining() const { return end_ - next_; }

 private:
  const Traverse* records_;
  std::size_t next_;
  std::size_t end_;
};

/// Full-range playback.
PlaybackStream playback(const Traverse& records);
/// Range playback; throws RangeOutOfBounds when end exceeds the record count
/// or begin exceeds end.
PlaybackStream playback(const Traverse& records, std::size_t begin,
                        std::size_t end);

/// One element of a merged two-traverse stream: which traverse the record
/// came from (0 or 1) plus the record itself.
struct DualPlaybackEvent {
  int traverse_id = 0;
  const TraverseRecord* record = nullptr;
};

/// Stable merge of two traverses by mission_time_s; ties yield traverse 0
/// first. Within one traverse the original frame order is preserved.
std::vector<DualPlaybackEvent> dual_playback(const Traverse& a,
                                             const Traverse& b);

/// Replays a traverse into a raw (unmerged) object map using the recorded
/// poses.
ObjectMap accumulate_traverse(const Traverse& records, std::string frame_name);

}  // namespace segloc
