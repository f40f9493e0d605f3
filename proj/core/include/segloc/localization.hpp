#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "segloc/association.hpp"
#include "segloc/geometry.hpp"
#include "segloc/mapping.hpp"

namespace segloc {

/// Outcome of aligning a vehicle map against a reference map.
struct LocalizationResult {
  /// Maps vehicle-frame positions into the reference frame.
  RigidTransform transform;
  /// Accepted correspondences (vehicle landmark, reference landmark).
  CorrespondenceSet inliers;
  int candidate_count = 0;
  int inlier_count = 0;
  /// Indicator density of the accepted set; equals inlier_count when the
  /// consistency subgraph is a clique.
  double density = 0.0;
  /// RMS residual of the inliers under the returned transform.
  double residual_rms_m = 0.0;
  /// True when residual_rms_m exceeds residual_ceiling_factor * epsilon_m;
  /// the transform is still returned, but callers should distrust it.
  bool residual_suspect = false;
};

/// Full alignment pipeline: candidate generation, pairwise consistency,
/// densest-clique inlier selection, then closed-form rigid registration over
/// the inliers. Deterministic: identical inputs yield bit-identical results.
/// Throws LocalizationRejected when no trustworthy transform exists (too few
/// inliers or no consistent set); never returns a fallback transform.
/// Degenerate-geometry and input-validation errors propagate unchanged.
LocalizationResult localize(const ObjectMap& map_vehicle,
                            const ObjectMap& map_reference,
                            const AssociationConfig& config = {});

/// One traverse pair's evaluation outcome. Counts are filled as far as the
/// pipeline progressed; rmse_cm and rot_err_deg are meaningful only when
/// status is "ok".
struct EvaluationRow {
  std::string path_a;
  std::string path_b;
  int segs_a = 0;
  int segs_b = 0;
  int candidates = 0;
  int inliers = 0;
  double density = 0.0;
  double rmse_cm = 0.0;
  double rot_err_deg = 0.0;
  /// "ok", "rejected", "missing", or "error".
  std::string status;
};

struct EvaluationConfig {
  AssociationConfig association;
  MergeConfig merge;
  /// Seed for the per-pair alignment offset; the pair identifiers are mixed
  /// in so each pair gets its own offset.
  std::uint64_t seed = 0;
  /// Bounds of the random offset applied to map A before localization.
  double offset_translation_m = 10.0;
  double offset_rotation_rad = 3.141592653589793;
};

/// Evaluates one traverse pair from `<data_root>/traverse_<id>.csv` files.
/// Both traverses are replayed into merged maps using their recorded poses;
/// map A is then displaced by a seeded random rigid offset and localized
/// against map B, and the error of the recovered transform against the known
/// offset is reported. When the identifiers are equal the offset is zero, so
/// a self-pair must evaluate to zero error. Pipeline failures are recorded
/// in the row's status, not thrown; only invalid configs throw.
EvaluationRow evaluate_pair(const std::string& id_a, const std::string& id_b,
                            const std::filesystem::path& data_root,
                            const EvaluationConfig& config = {});

/// Deterministic CSV report, one line per row:
/// path_a,path_b,segs_a,segs_b,candidates,inliers,density,rmse_cm,
/// rot_err_deg,status. Error columns are empty unless status is "ok".
std::string evaluation_report_csv(std::span<const EvaluationRow> rows);

/// Fixed-width human-readable table with the same content.
std::string evaluation_report_table(std::span<const EvaluationRow> rows);

}  // namespace segloc
