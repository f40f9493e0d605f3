#include "segloc/association.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "segloc/errors.hpp"

namespace segloc {

BinaryAffinity::BinaryAffinity(int size)
    : size_(size),
      words_per_row_((size + 63) / 64),
      words_(static_cast<std::size_t>(size) * ((size + 63) / 64), 0) {
  if (size < 0) {
    throw std::invalid_argument("affinity size must be nonnegative");
  }
  for (int i = 0; i < size_; ++i) {
    words_[static_cast<std::size_t>(i) * words_per_row_ + (i >> 6)] |=
        std::uint64_t{1} << (i & 63);
  }
}

void BinaryAffinity::set_edge(int i, int j) {
  words_[static_cast<std::size_t>(i) * words_per_row_ + (j >> 6)] |=
      std::uint64_t{1} << (j & 63);
  words_[static_cast<std::size_t>(j) * words_per_row_ + (i >> 6)] |=
      std::uint64_t{1} << (i & 63);
}

void BinaryAffinity::multiply(std::span<const double> u,
                              std::span<double> out) const {
  for (int i = 0; i < size_; ++i) {
    const std::uint64_t* row_words =
        words_.data() + static_cast<std::size_t>(i) * words_per_row_;
    double sum = 0.0;
    for (int w = 0; w < words_per_row_; ++w) {
      std::uint64_t bits = row_words[w];
      while (bits != 0) {
        const int j = (w << 6) + std::countr_zero(bits);
        sum += u[j];
        bits &= bits - 1;
      }
    }
    out[i] = sum;
  }
}

bool BinaryAffinity::is_clique(std::span<const int> selected) const {
  for (std::size_t p = 0; p < selected.size(); ++p) {
    for (std::size_t q = p + 1; q < selected.size(); ++q) {
      if (!test(selected[p], selected[q])) {
        return false;
      }
    }
  }
  return true;
}

double BinaryAffinity::indicator_density(std::span<const int> selected) const {
  if (selected.empty()) {
    return 0.0;
  }
  std::int64_t ones = 0;
  for (const int i : selected) {
    for (const int j : selected) {
      ones += test(i, j) ? 1 : 0;
    }
  }
  return static_cast<double>(ones) / static_cast<double>(selected.size());
}

int BinaryAffinity::consistent_within(int i,
                                      std::span<const int> selected) const {
  int count = 0;
  for (const int j : selected) {
    if (j != i && test(i, j)) {
      ++count;
    }
  }
  return count;
}

void validate(const AssociationConfig& config) {
  if (!(config.epsilon_m > 0.0)) {
    throw std::invalid_argument("epsilon_m must be positive");
  }
  if (config.size_gate_ratio > 0.0 && config.size_gate_ratio < 1.0) {
    throw std::invalid_argument(
        "size_gate_ratio must be >= 1 when enabled (<= 0 disables)");
  }
  if (config.min_inliers < 3) {
    throw std::invalid_argument("min_inliers must be >= 3");
  }
  if (!(config.residual_ceiling_factor > 0.0)) {
    throw std::invalid_argument("residual_ceiling_factor must be positive");
  }
}

std::vector<CandidateAssociation> generate_candidates(
    const ObjectMap& map_a, const ObjectMap& map_b,
    const AssociationConfig& config) {
  validate(config);
  validate(map_a);
  validate(map_b);
  if (map_a.landmarks.empty() || map_b.landmarks.empty()) {
    throw EmptyMap("candidate generation needs non-empty maps");
  }
  if (!config.allow_same_frame && map_a.frame_name == map_b.frame_name) {
    throw SameFrameComparison("refusing to associate a frame with itself: '" +
                              map_a.frame_name + "'");
  }
  const bool gated = config.size_gate_ratio >= 1.0;
  std::vector<CandidateAssociation> candidates;
  candidates.reserve(map_a.landmarks.size() * map_b.landmarks.size());
  for (int i = 0; i < static_cast<int>(map_a.landmarks.size()); ++i) {
    for (int j = 0; j < static_cast<int>(map_b.landmarks.size()); ++j) {
      if (gated) {
        const double sa = map_a.landmarks[i].size_m;
        const double sb = map_b.landmarks[j].size_m;
        const double ratio = sa > sb ? sa / sb : sb / sa;
        if (ratio > config.size_gate_ratio) {
          continue;
        }
      }
      candidates.push_back(CandidateAssociation{i, j});
    }
  }
  return candidates;
}

namespace {

// Flattened pairwise distance table of one map's landmarks.
std::vector<double> distance_table(const ObjectMap& map) {
  const std::size_t n = map.landmarks.size();
  std::vector<double> table(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d =
          (map.landmarks[i].position - map.landmarks[j].position).norm();
      table[i * n + j] = d;
      table[j * n + i] = d;
    }
  }
  return table;
}

}  // namespace

ConsistencyGraph build_affinity(std::vector<CandidateAssociation> candidates,
                                const ObjectMap& map_a, const ObjectMap& map_b,
                                const AssociationConfig& config) {
  validate(config);
  if (candidates.empty()) {
    throw std::invalid_argument("affinity needs at least one candidate");
  }
  const int na = static_cast<int>(map_a.landmarks.size());
  const int nb = static_cast<int>(map_b.landmarks.size());
  for (const CandidateAssociation& c : candidates) {
    if (c.source_index < 0 || c.source_index >= na || c.target_index < 0 ||
        c.target_index >= nb) {
      throw std::invalid_argument("candidate index out of range");
    }
  }

  const std::vector<double> dist_a = distance_table(map_a);
  const std::vector<double> dist_b = distance_table(map_b);
  const int n = static_cast<int>(candidates.size());

  ConsistencyGraph graph;
  graph.affinity = BinaryAffinity(n);
  for (int p = 0; p < n; ++p) {
    const auto [ap, bp] = candidates[p];
    for (int q = p + 1; q < n; ++q) {
      const auto [aq, bq] = candidates[q];
      if (ap == aq || bp == bq) {
        continue;  // one landmark cannot match two counterparts
      }
      const double da = dist_a[static_cast<std::size_t>(ap) * na + aq];
      const double db = dist_b[static_cast<std::size_t>(bp) * nb + bq];
      if (std::abs(da - db) <= config.epsilon_m) {
        graph.affinity.set_edge(p, q);
      }
    }
  }
  graph.candidates = std::move(candidates);
  return graph;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

double sum_of(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) {
    sum += x;
  }
  return sum;
}

double norm_of(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Column-index adjacency for the solver's repeated matvecs: iterating the
// per-row index lists (ascending, exactly like BinaryAffinity::multiply)
// avoids rescanning the bit words on every product, which dominates solve
// time on large graphs. Accumulation order, and therefore every floating-
// point result, is identical to multiplying through BinaryAffinity.
struct CompressedAffinity {
  int n = 0;
  std::vector<std::int32_t> offsets;
  std::vector<std::int32_t> columns;

  explicit CompressedAffinity(const BinaryAffinity& a) : n(a.size()) {
    std::size_t nonzeros = 0;
    for (int i = 0; i < n; ++i) {
      for (const std::uint64_t word : a.row(i)) {
        nonzeros += static_cast<std::size_t>(std::popcount(word));
      }
    }
    offsets.reserve(static_cast<std::size_t>(n) + 1);
    columns.reserve(nonzeros);
    offsets.push_back(0);
    for (int i = 0; i < n; ++i) {
      const std::span<const std::uint64_t> row = a.row(i);
      for (std::size_t w = 0; w < row.size(); ++w) {
        std::uint64_t bits = row[w];
        while (bits != 0) {
          columns.push_back(static_cast<std::int32_t>(
              (w << 6) + static_cast<std::size_t>(std::countr_zero(bits))));
          bits &= bits - 1;
        }
      }
      offsets.push_back(static_cast<std::int32_t>(columns.size()));
    }
  }

  void multiply(std::span<const double> u, std::span<double> out) const {
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::int32_t k = offsets[i]; k < offsets[i + 1]; ++k) {
        sum += u[static_cast<std::size_t>(columns[static_cast<std::size_t>(k)])];
      }
      out[i] = sum;
    }
  }
};

// Penalized objective F_d(u) = u^T A u - d * u^T (J - A) u
//                            = (1 + d) u^T A u - d (sum u)^2.
double penalized_objective(const CompressedAffinity& a,
                           std::span<const double> u,
                           std::span<double> au_scratch, double d) {
  a.multiply(u, au_scratch);
  const double uau = dot(u, au_scratch);
  const double s = sum_of(u);
  return (1.0 + d) * uau - d * s * s;
}

std::vector<int> support_of(std::span<const double> u, double relative) {
  double peak = 0.0;
  for (const double x : u) {
    peak = std::max(peak, x);
  }
  std::vector<int> support;
  for (int i = 0; i < static_cast<int>(u.size()); ++i) {
    if (u[i] > relative * peak) {
      support.push_back(i);
    }
  }
  return support;
}

// Removes constraint-violating members until the set is a clique: repeatedly
// drop the conflicted index with the smallest weight (ties: the larger index
// goes, so low indices survive).
void repair_to_clique(const BinaryAffinity& a, std::span<const double> u,
                      std::vector<int>& selected) {
  while (!a.is_clique(selected)) {
    int victim = -1;
    double victim_weight = std::numeric_limits<double>::infinity();
    const int full = static_cast<int>(selected.size()) - 1;
    for (const int i : selected) {
      if (a.consistent_within(i, selected) == full) {
        continue;
      }
      if (victim == -1 || u[i] < victim_weight ||
          (u[i] == victim_weight && i > victim)) {
        victim = i;
        victim_weight = u[i];
      }
    }
    selected.erase(std::find(selected.begin(), selected.end(), victim));
  }
}

// Deterministic maximal completion: add every vertex (ascending) consistent
// with the whole current selection.
void complete_to_maximal(const BinaryAffinity& a, std::vector<int>& selected) {
  for (int v = 0; v < a.size(); ++v) {
    if (std::binary_search(selected.begin(), selected.end(), v)) {
      continue;
    }
    if (a.consistent_within(v, selected) ==
        static_cast<int>(selected.size())) {
      selected.insert(std::lower_bound(selected.begin(), selected.end(), v),
                      v);
    }
  }
}

}  // namespace

CliqueSolution solve_densest_clique(const ConsistencyGraph& graph) {
  const BinaryAffinity& a = graph.affinity;
  const int n = a.size();
  if (n == 0) {
    throw NoConsistentSet("no candidates to select from");
  }

  const CompressedAffinity compressed(a);
  std::vector<double> u(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> au(n, 0.0);
  std::vector<double> trial(n, 0.0);
  std::vector<double> a_trial(n, 0.0);

  // Principal-eigenvector warm start: fixed-iteration power method from the
  // all-ones direction, so the solver has no random state.
  for (int iter = 0; iter < 128; ++iter) {
    compressed.multiply(u, au);
    const double norm = norm_of(au);
    if (norm <= 0.0) {
      break;
    }
    double max_change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double next = au[i] / norm;
      max_change = std::max(max_change, std::abs(next - u[i]));
      u[i] = next;
    }
    if (max_change < 1e-12) {
      break;
    }
  }

  // Penalty homotopy: ascend the penalized objective at fixed d, then raise d
  // until the support satisfies the pairwise constraints.
  std::vector<int> selected;
  double d = 0.0;
  for (int stage = 0; stage < 64; ++stage) {
    double step = 1.0;
    double f = penalized_objective(compressed, u, au, d);  // au = A u
    for (int iter = 0; iter < 500; ++iter) {
      // Ascent direction of F_d at u (global factor 2 dropped):
      // (1 + d) A u - d (sum u) 1.
      const double s = sum_of(u);
      bool accepted = false;
      bool converged = false;
      for (int bt = 0; bt < 40 && !accepted; ++bt) {
        for (int i = 0; i < n; ++i) {
          trial[i] = std::max(0.0, u[i] + step * ((1.0 + d) * au[i] - d * s));
        }
        const double norm = norm_of(trial);
        if (norm > 0.0) {
          for (int i = 0; i < n; ++i) {
            trial[i] /= norm;
          }
          const double f_trial =
              penalized_objective(compressed, trial, a_trial, d);
          if (f_trial > f + 1e-14) {
            double max_change = 0.0;
            for (int i = 0; i < n; ++i) {
              max_change = std::max(max_change, std::abs(trial[i] - u[i]));
            }
            u.swap(trial);
            au.swap(a_trial);
            f = f_trial;
            step = std::min(step * 1.5, 1e6);
            accepted = true;
            converged = max_change < 1e-12;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted || converged) {
        break;  // local optimum (or fixed point) at this penalty level
      }
    }
    selected = support_of(u, 1e-3);
    if (a.is_clique(selected)) {
      break;
    }
    d = d == 0.0 ? 0.25 : d * 2.0;
  }

  repair_to_clique(a, u, selected);
  std::sort(selected.begin(), selected.end());
  complete_to_maximal(a, selected);

  if (selected.size() < 2) {
    throw NoConsistentSet("densest consistent set has fewer than 2 members");
  }
  const double density = a.indicator_density(selected);
  return CliqueSolution{std::move(selected), density};
}

namespace {

// Branch-and-bound maximum clique on adjacency bitmasks (n <= 64), with a
// greedy-coloring upper bound.
class MaxCliqueSearch {
 public:
  MaxCliqueSearch(const BinaryAffinity& a, int n) : n_(n), adjacency_(n, 0) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && a.test(i, j)) {
          adjacency_[i] |= std::uint64_t{1} << j;
        }
      }
    }
  }

  int max_clique_size(std::uint64_t allowed) {
    best_ = 0;
    if (allowed != 0) {
      expand(allowed, 0);
    }
    return best_;
  }

  std::uint64_t neighbors(int v) const { return adjacency_[v]; }

 private:
  void expand(std::uint64_t p, int clique_size) {
    int order[64];
    int bound[64];
    // Greedy coloring: peel independent sets; a vertex in color class c can
    // extend the clique by at most c.
    int count = 0;
    int color = 0;
    std::uint64_t rest = p;
    while (rest != 0) {
      ++color;
      std::uint64_t candidates_in_class = rest;
      while (candidates_in_class != 0) {
        const int v = std::countr_zero(candidates_in_class);
        candidates_in_class &= ~(adjacency_[v] | (std::uint64_t{1} << v));
        rest &= ~(std::uint64_t{1} << v);
        order[count] = v;
        bound[count] = color;
        ++count;
      }
    }
    for (int i = count - 1; i >= 0; --i) {
      if (clique_size + bound[i] <= best_) {
        return;
      }
      const int v = order[i];
      const std::uint64_t next = p & adjacency_[v];
      if (next == 0) {
        best_ = std::max(best_, clique_size + 1);
      } else {
        expand(next, clique_size + 1);
      }
      p &= ~(std::uint64_t{1} << v);
    }
  }

  int n_;
  std::vector<std::uint64_t> adjacency_;
  int best_ = 0;
};

}  // namespace

CliqueSolution solve_densest_clique_exact(const ConsistencyGraph& graph,
                                          int max_size) {
  const BinaryAffinity& a = graph.affinity;
  const int n = a.size();
  if (n > max_size || n > 64) {
    throw InstanceTooLarge("exact solver limited to " +
                           std::to_string(std::min(max_size, 64)) +
                           " candidates, got " + std::to_string(n));
  }
  if (n == 0) {
    throw NoConsistentSet("no candidates to select from");
  }

  MaxCliqueSearch search(a, n);
  const std::uint64_t all =
      n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  const int omega = search.max_clique_size(all);

  // Greedy ascending inclusion builds the lexicographically smallest clique
  // of maximum size: take v exactly when an omega-clique through the current
  // prefix still exists.
  std::vector<int> selected;
  std::uint64_t pool = all;
  for (int v = 0; v < n && static_cast<int>(selected.size()) < omega; ++v) {
    if (((pool >> v) & 1) == 0) {
      continue;
    }
    const std::uint64_t with_v = pool & search.neighbors(v);
    const int reachable =
        static_cast<int>(selected.size()) + 1 + search.max_clique_size(with_v);
    if (reachable >= omega) {
      selected.push_back(v);
      pool = with_v;
    } else {
      pool &= ~(std::uint64_t{1} << v);
    }
  }
  const double density = a.indicator_density(selected);
  return CliqueSolution{std::move(selected), density};
}

CorrespondenceSet extract_inliers(const CliqueSolution& solution,
                                  std::span<const CandidateAssociation> candidates,
                                  const ObjectMap& map_a, const ObjectMap& map_b,
                                  const AssociationConfig& config) {
  if (static_cast<int>(solution.selected.size()) < config.min_inliers) {
    throw TooFewInliers("selected " + std::to_string(solution.selected.size()) +
                        " associations, need " +
                        std::to_string(config.min_inliers));
  }
  CorrespondenceSet correspondences;
  correspondences.reserve(solution.selected.size());
  for (const int idx : solution.selected) {
    if (idx < 0 || idx >= static_cast<int>(candidates.size())) {
      throw std::invalid_argument("selected candidate index out of range");
    }
    const CandidateAssociation& c = candidates[idx];
    correspondences.push_back(
        Correspondence{map_a.landmarks[c.source_index].position,
                       map_b.landmarks[c.target_index].position});
  }
  return correspondences;
}

}  // namespace segloc
