#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "relucvx/core.hpp"

namespace relucvx {

/// Activation pattern over the n samples: bit i is 1 iff sample i is active.
/// The boundary convention is >= (a tie counts as active), matching the
/// indicator used everywhere else in the library; with continuous data ties
/// have probability zero, but file data may produce them.
struct Pattern {
  std::vector<std::uint8_t> mask;

  Eigen::Index size() const { return static_cast<Eigen::Index>(mask.size()); }
  bool active(Eigen::Index i) const { return mask[static_cast<std::size_t>(i)] != 0; }
  bool operator==(const Pattern& o) const { return mask == o.mask; }

  /// 0/1 vector view of the diagonal activation matrix D.
  Eigen::VectorXd indicator() const;

  /// Signed rows (2D - I) X of the cone {u : (2D - I) X u >= 0}.
  Eigen::MatrixXd signed_rows(const Eigen::MatrixXd& X) const;

  std::string to_string() const;
};

Pattern pattern_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& g);

enum class Provenance { sampled, enumerated, paired, explicit_set };

/// Ordered, duplicate-free collection of patterns. Sampled sets are nested:
/// the set for count k is a prefix of the set for count k' > k under the same
/// seed.
struct PatternSet {
  std::vector<Pattern> patterns;
  Provenance provenance = Provenance::explicit_set;
  std::uint64_t seed = 0;
  int count_requested = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(patterns.size()); }
  bool contains(const Pattern& p) const;
};

/// Draws i.i.d. g ~ N(0, I_d), takes the sign pattern of X g, deduplicates,
/// and stops after `count` distinct patterns or a retry budget of 50*count
/// draws. Fewer-than-requested is a reported, non-error outcome.
PatternSet sample_patterns(const Dataset& ds, int count, std::uint64_t seed);

/// All strictly realizable patterns (the feasibility margin scales with the
/// row norms). Guarded to n <= 20 and d <= 6.
PatternSet enumerate_patterns(const Dataset& ds);

/// One pattern pair per sample, differing exactly in that sample's bit. The
/// construction picks a point c_i on the i-th hyperplane clear of the others
/// and takes the patterns of c_i +- eps X_i. Requires no two rows parallel.
std::vector<std::pair<Pattern, Pattern>> paired_pattern_list(const Dataset& ds);

/// The pairs above flattened into a PatternSet (deduplicated, so degenerate
/// collisions across pairs can shrink it below 2n).
PatternSet paired_patterns(const Dataset& ds);

/// Strict realizability: some u satisfies (2D - I) X u >= eps * row norms.
bool is_realizable(const Dataset& ds, const Pattern& p);

}  // namespace relucvx
