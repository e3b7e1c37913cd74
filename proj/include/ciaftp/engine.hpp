#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "ciaftp/kernel.hpp"
#include "ciaftp/trie.hpp"
#include "ciaftp/update_rule.hpp"

namespace ciaftp {

/// The sampled window X_{-L}..X_{-1}, oldest first.
using Window = std::vector<Symbol>;

/// Seeded stream of uniform draws on [0, 1). The generator is fixed; its
/// name goes into every output header.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// 53 random bits scaled to [0, 1).
  double next_uniform() {
    ++counter_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
};

struct Limits {
  std::uint64_t max_iter = 1'000'000;
  std::size_t max_depth = kDefaultMaxDepth;
  std::uint64_t max_nodes = 10'000'000;
};

/// The labeled trie H_t: each leaf context maps to the window it forces.
struct EngineState {
  std::int64_t t = 0;
  std::size_t window = 0;
  LabeledTrie<Window> map;

  bool coalesced() const { return map.is_root_leaf(); }
};

/// t = 0, complete depth-L trie, each leaf labeled by itself.
EngineState init(const Alphabet& alphabet, std::size_t window);

struct StepRecord {
  std::int64_t t = 0;
  std::uint64_t leaves = 0;
  std::uint64_t depth = 0;
  std::uint64_t node_touches = 0;
  std::uint64_t slice_depth = 0;
  bool regeneration = false;
};

struct StepOptions {
  std::size_t max_depth = kDefaultMaxDepth;
  std::uint64_t max_nodes = 10'000'000;
  bool check_invariants = false;
  /// Prefix closure of a context-tree kernel's dictionary; when set and
  /// invariants are checked, the dictionary is compared against it once the
  /// warm-up of L steps is over.
  const CsdTrie* closure = nullptr;
};

/// One backward step with draw u: build the slice, compose it with the
/// current map, prune. Throws Error(MaxDepthExceeded / NodeBudgetExceeded),
/// and Error(StructuralError) when a checked invariant fails.
StepRecord step(EngineState& state, double u, const Kernel& kernel, const StepOptions& options = {});

/// The composed map H_{t+1}(h · φ(u, h)) before pruning, built in one product
/// traversal of the slice and the current map. Runs of the slice become runs
/// of the result wherever the current map allows.
LabeledTrie<Window> compose(const LabeledTrie<Window>& map, const UpdateSlice& slice,
                            std::uint64_t max_nodes = 10'000'000);

/// The composed map before pruning, built by literal grafting leaf by leaf.
/// Slow reference for tests of the fused construction in `step`.
LabeledTrie<Window> compose_by_grafting(const LabeledTrie<Window>& map, const UpdateSlice& slice);

struct RunDiagnostics {
  std::int64_t tau = 0;
  std::uint64_t iterations = 0;
  std::vector<StepRecord> records;
  std::uint64_t total_node_touches = 0;
  std::vector<std::int64_t> regeneration_times;
  std::uint64_t seed = 0;
  std::string_view generator = RngStream::kAlgorithm;
  std::uint64_t wall_ns = 0;
};

struct RunOptions {
  bool check_invariants = false;
  bool keep_records = true;
};

struct RunResult {
  Window sample;
  RunDiagnostics diagnostics;
};

/// Raised when a run stops on a budget; carries what was recorded so far.
class RunAborted : public Error {
 public:
  RunAborted(const Error& cause, RunDiagnostics partial)
      : Error(cause.code(), cause.what()), diagnostics_(std::move(partial)) {}
  const RunDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  RunDiagnostics diagnostics_;
};

/// Steps backward from t = -1 until the map is constant.
RunResult run(const Kernel& kernel, std::size_t window, RngStream& rng, const Limits& limits = {},
              const RunOptions& options = {});
RunResult run(const Kernel& kernel, std::size_t window, std::uint64_t seed, const Limits& limits = {},
              const RunOptions& options = {});

/// Baseline: the same backward composition held as a flat table over all
/// max(d, L - elapsed)-tuples of the finite-order kernel, no adaptive slices.
/// Same draws in the same order as `run`, so it returns the same sample and tau.
RunResult pw_extended(const Kernel& kernel, std::size_t window, RngStream& rng, const Limits& limits = {},
                      const RunOptions& options = {});
RunResult pw_extended(const Kernel& kernel, std::size_t window, std::uint64_t seed, const Limits& limits = {},
                      const RunOptions& options = {});

}  // namespace ciaftp
