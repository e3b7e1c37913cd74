#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ciaftp/kernel.hpp"
#include "ciaftp/trie.hpp"

namespace ciaftp {

/// One half-open interval [alpha, beta) of the coupling layout: draws in it
/// emit `symbol`, decided at context depth `level`.
struct IntervalAssignment {
  std::size_t level = 0;
  Symbol symbol = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Running state of the interval layout along one history, level by level.
/// Every consumer of the layout (tables, evaluation, slice construction)
/// goes through `push`, so boundaries agree to the last bit.
class LevelAccumulator {
 public:
  explicit LevelAccumulator(std::size_t arity) : previous_(arity, 0.0) {}

  /// Lays out the next level from its lower-bound row. Returns the level's
  /// intervals, one per symbol, contiguous from the previous cursor. When
  /// the row is resolved the layout is closed at 1.
  std::vector<IntervalAssignment> push(const LowerBoundRow& row);

  /// Like `push`, but only reports which symbol of the new level holds u,
  /// if any.
  std::optional<Symbol> push_and_find(const LowerBoundRow& row, double u);

  /// A_k as accumulated: the end of the laid-out part of [0, 1).
  double cursor() const noexcept { return cursor_; }
  std::size_t levels() const noexcept { return levels_; }

 private:
  std::vector<double> previous_;
  double cursor_ = 0.0;
  std::size_t levels_ = 0;
};

/// Intervals for levels 0..|w| in ascending (level, symbol) order, stopping
/// after the first level whose accumulated mass exceeds u_cap.
std::vector<IntervalAssignment> interval_table(const Kernel& k, const Context& w, double u_cap = 1.0);

/// The symbol emitted for draw u at history suffix s, or nullopt when s is
/// too short to decide (u ≥ A_{|s|}(s)).
std::optional<Symbol> phi(const Kernel& k, double u, const Context& s);

/// A_{|s|}(s) as accumulated by the layout.
double coupling_mass(const Kernel& k, const Context& s);

/// The minimal labeled trie of φ(u, ·) for one draw.
struct UpdateSlice {
  double u = 0.0;
  LabeledTrie<Symbol> trie;
  std::uint64_t depth = 0;
  /// Contexts evaluated while building.
  std::uint64_t node_touches = 0;
};

inline constexpr std::size_t kDefaultMaxDepth = 10'000;

/// Builds the slice by depth-first expansion from the root. `max_depth`
/// bounds the number of explicitly expanded levels on any branch; with
/// `use_hints` the kernel's closed-form spines are stored as runs, each
/// counting as one level. Throws Error(MaxDepthExceeded).
UpdateSlice build_slice(const Kernel& k, double u, std::size_t max_depth = kDefaultMaxDepth, bool use_hints = true);

/// True iff the slice is the constant map: φ(u, ·) ignores the past.
inline bool detect_regeneration(const UpdateSlice& slice) { return slice.trie.is_root_leaf(); }

struct MeasureReport {
  bool ok = true;
  /// Total interval length per symbol.
  std::vector<double> mass;
  /// The kernel law at w.
  std::vector<double> expected;
  double coverage = 0.0;
  std::vector<IntervalAssignment> intervals;
  std::vector<std::string> failures;
};

/// Checks the layout at a resolving history w: per-symbol interval length
/// equals P(g|w) within `tolerance`, intervals are sorted, disjoint, and
/// cover [0, 1). Throws Error(InvalidArgument) if w does not resolve the kernel.
MeasureReport verify_measure(const Kernel& k, const Context& w, double tolerance = 1e-9);

}  // namespace ciaftp
