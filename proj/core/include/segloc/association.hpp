#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segloc/geometry.hpp"
#include "segloc/mapping.hpp"

namespace segloc {

/// A putative match: landmark source_index in map A corresponds to landmark
/// target_index in map B.
struct CandidateAssociation {
  int source_index = 0;
  int target_index = 0;
};

/// Symmetric binary matrix with a unit diagonal, bit-packed row-major.
/// Row i answers "which candidates are pairwise consistent with i".
class BinaryAffinity {
 public:
  BinaryAffinity() = default;
  explicit BinaryAffinity(int size);

  int size() const { return size_; }
  int words_per_row() const { return words_per_row_; }

  bool test(int i, int j) const {
    return (words_[static_cast<std::size_t>(i) * words_per_row_ +
                   (j >> 6)] >>
            (j & 63)) &
           1u;
  }

  /// Sets A[i][j] = A[j][i] = 1.
  void set_edge(int i, int j);

  /// out = A u. Deterministic accumulation order (ascending j per row).
  void multiply(std::span<const double> u, std::span<double> out) const;

  /// True when every pair of the given indices has affinity 1.
  bool is_clique(std::span<const int> selected) const;

  /// Indicator density u^T A u / u^T u for the binary indicator of the set.
  double indicator_density(std::span<const int> selected) const;

  /// Number of selected indices j != i with A[i][j] = 1.
  int consistent_within(int i, std::span<const int> selected) const;

  std::span<const std::uint64_t> row(int i) const {
    return {words_.data() + static_cast<std::size_t>(i) * words_per_row_,
            static_cast<std::size_t>(words_per_row_)};
  }

 private:
  int size_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Candidates plus their pairwise-consistency matrix.
struct ConsistencyGraph {
  std::vector<CandidateAssociation> candidates;
  BinaryAffinity affinity;
};

struct AssociationConfig {
  /// Two candidate matches are consistent when their source-side and
  /// target-side inter-landmark distances differ by at most this.
  double epsilon_m = 0.10;
  /// Candidate pairs whose size ratio exceeds this are not generated;
  /// values below 1 disable the gate.
  double size_gate_ratio = 0.0;
  int min_inliers = 5;
  /// Maps with equal frame names are refused unless this is set, as a guard
  /// against accidentally localizing a map against itself.
  bool allow_same_frame = false;
  /// Flag threshold for suspicious registrations: residual RMS above
  /// residual_ceiling_factor * epsilon_m marks the result suspect.
  double residual_ceiling_factor = 3.0;
};

void validate(const AssociationConfig& config);

struct CliqueSolution {
  /// Candidate indices, ascending.
  std::vector<int> selected;
  /// u^T A u / u^T u at the binary indicator of `selected`; equals
  /// |selected| when the set is a clique, by the unit-diagonal convention.
  double density = 0.0;
};

/// All source x target landmark pairs in row-major order, optionally gated by
/// landmark size ratio. Throws EmptyMap and SameFrameComparison.
std::vector<CandidateAssociation> generate_candidates(
    const ObjectMap& map_a, const ObjectMap& map_b,
    const AssociationConfig& config);

/// Scores every candidate pair: affinity 1 when the pair preserves
/// inter-landmark distance within epsilon_m and does not reuse a source or
/// target landmark. Throws std::invalid_argument on empty candidate lists or
/// out-of-range indices.
ConsistencyGraph build_affinity(std::vector<CandidateAssociation> candidates,
                                const ObjectMap& map_a, const ObjectMap& map_b,
                                const AssociationConfig& config);

/// Densest-clique relaxation solver. Relaxes the binary indicator to the
/// nonnegative unit sphere, ascends u^T A u by projected gradient with a
/// penalty on constraint-violating pairs, and raises the penalty until the
/// support of u is a clique. The support is then verified against A, repaired
/// if needed, and extended to a maximal clique deterministically. Fully
/// deterministic: initialization is a fixed-iteration power method started
/// from the all-ones vector. Throws NoConsistentSet when no clique of size
/// at least 2 is found.
CliqueSolution solve_densest_clique(const ConsistencyGraph& graph);

/// Exact maximum clique by branch-and-bound with a greedy-coloring bound.
/// For a binary affinity with unit diagonal the densest feasible indicator is
/// a maximum clique and its density is the clique size, so this is the exact
/// reference for the relaxation. Ties are broken by the lexicographically
/// smallest index set. Throws InstanceTooLarge above max_size (default 25,
/// hard limit 64).
CliqueSolution solve_densest_clique_exact(const ConsistencyGraph& graph,
                                          int max_size = 25);

/// Turns selected candidates into point correspondences, preserving selection
/// order. Throws TooFewInliers when fewer than config.min_inliers candidates
/// are selected.
CorrespondenceSet extract_inliers(const CliqueSolution& solution,
                                  std::span<const CandidateAssociation> candidates,
                                  const ObjectMap& map_a, const ObjectMap& map_b,
                                  const AssociationConfig& config);

}  // namespace segloc
