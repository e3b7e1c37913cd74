#include "ciaftp/engine.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "ciaftp/dictionary.hpp"

namespace ciaftp {

namespace {

using MapTrie = LabeledTrie<Window>;
using SliceTrie = LabeledTrie<Symbol>;

[[noreturn]] void invariant_failure(std::int64_t t, const std::string& what) {
  std::ostringstream msg;
  msg << "invariant violated at t = " << t << ": " << what;
  throw Error(ErrorCode::StructuralError, msg.str());
}

class Composer {
 public:
  Composer(const MapTrie& map, const SliceTrie& slice, MapTrie& out, std::uint64_t max_nodes)
      : map_(map), slice_(slice), out_(out), max_nodes_(max_nodes), arity_(map.arity()) {}

  void build(MapTrie::NodeId target, SliceTrie::Position sp, std::vector<MapTrie::Position> dp) {
    for (;;) {
      check_budget();
      if (slice_.is_leaf(sp)) {
        out_.copy_into(target, map_, dp[slice_.leaf_label(sp)]);
        return;
      }
      if (!slice_.on_run(sp)) {
        MapTrie::NodeId first = out_.expand(target);
        for (std::size_t b = 0; b < arity_; ++b) {
          std::vector<MapTrie::Position> next(arity_);
          for (std::size_t g = 0; g < arity_; ++g) next[g] = map_.step(dp[g], static_cast<Symbol>(b));
          build(first + static_cast<MapTrie::NodeId>(b), slice_.step(sp, static_cast<Symbol>(b)), std::move(next));
        }
        return;
      }
      target = follow_run(target, sp, dp);
      sp = slice_.advance(sp, slice_.run_symbol(sp), slice_.run_remaining(sp));
    }
  }

 private:
  // Walks a spine of the slice: along a^i·s the side children resolve to the
  // run's symbol v, so the result there is the map read at b·a^i·s·v.
  MapTrie::NodeId follow_run(MapTrie::NodeId target, SliceTrie::Position sp, std::vector<MapTrie::Position>& dp) {
    const Symbol a = slice_.run_symbol(sp);
    const Symbol v = slice_.leaf_label(sp);
    std::uint64_t remaining = slice_.run_remaining(sp);
    while (remaining > 0) {
      check_budget();
      const MapTrie::Position q = dp[v];
      std::uint64_t k = 0;
      if (map_.is_leaf(q)) {
        k = remaining;
      } else if (map_.on_run(q) && map_.run_symbol(q) == a) {
        k = std::min(remaining, map_.run_remaining(q));
      }
      if (k > 0) {
        target = out_.make_run(target, a, k, map_.leaf_label(q));
      } else {
        MapTrie::NodeId first = out_.expand(target);
        for (std::size_t b = 0; b < arity_; ++b)
          if (b != a) out_.copy_into(first + static_cast<MapTrie::NodeId>(b), map_, map_.step(q, static_cast<Symbol>(b)));
        target = first + a;
        k = 1;
      }
      for (auto& p : dp) p = map_.advance(p, a, k);
      remaining -= k;
    }
    return target;
  }

  void check_budget() const {
    if (out_.stored_nodes() > max_nodes_) throw Error(ErrorCode::NodeBudgetExceeded, "composed trie exceeds the node budget");
  }

  const MapTrie& map_;
  const SliceTrie& slice_;
  MapTrie& out_;
  std::uint64_t max_nodes_;
  std::size_t arity_;
};

void check_step(const EngineState& before, const MapTrie& composed, const MapTrie& pruned, const UpdateSlice& slice,
                const Kernel& kernel, const StepOptions& options, std::int64_t t) {
  constexpr std::uint64_t kEnumerate = 1 << 14;
  constexpr std::uint64_t kEnumerateDepth = 256;
  // The composition is a complete suffix dictionary refining the slice.
  try {
    composed.validate();
  } catch (const Error& e) {
    invariant_failure(t, std::string("composed trie is malformed: ") + e.what());
  }
  if (!dominates(composed, slice.trie)) invariant_failure(t, "composed dictionary does not refine the slice");
  // Every label is a full window read off the previous map at h·φ(u, h).
  if (composed.leaf_count() <= kEnumerate && composed.depth() <= kEnumerateDepth) {
    composed.for_each_leaf([&](const Context& h, const Window& label) {
      if (label.size() != before.window) invariant_failure(t, "label is not a full window");
      auto g = phi(kernel, slice.u, h);
      if (!g) invariant_failure(t, "slice does not resolve a leaf of the composed map");
      auto prev = before.map.lookup(h.then(*g));
      if (!prev.found || !(*prev.label == label)) invariant_failure(t, "label differs from the previous map at h·φ(u, h)");
    });
  }
  const std::uint64_t prev_depth = before.map.depth();
  if (pruned.depth() > std::max<std::uint64_t>(slice.depth, prev_depth == 0 ? 0 : prev_depth - 1))
    invariant_failure(t, "depth exceeds max(slice depth, previous depth - 1)");
  if (-t < static_cast<std::int64_t>(before.window) && pruned.is_root_leaf())
    invariant_failure(t, "coalesced before the window was filled");
  if (options.closure && -t >= static_cast<std::int64_t>(before.window)) {
    CsdTrie shape = shape_of(pruned);
    if (!dominates(*options.closure, shape)) invariant_failure(t, "prefix closure does not dominate the dictionary");
    if (shape.leaf_count() > options.closure->leaf_count())
      invariant_failure(t, "dictionary has more leaves than the prefix closure");
  }
}

std::uint64_t elapsed_ns(std::chrono::steady_clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - since).count());
}

std::optional<CsdTrie> closure_for(const Kernel& kernel) {
  const auto* tree = dynamic_cast<const ContextTreeKernel*>(&kernel);
  if (!tree) return std::nullopt;
  return prefix_closure(shape_of(tree->tree()));
}

}  // namespace

EngineState init(const Alphabet& alphabet, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window length must be at least 1");
  EngineState s;
  s.window = window;
  s.map = MapTrie::complete(alphabet.size(), window, [](const Context& c) { return c.vec(); });
  return s;
}

MapTrie compose(const MapTrie& map, const UpdateSlice& slice, std::uint64_t max_nodes) {
  if (map.arity() != slice.trie.arity()) throw Error(ErrorCode::StructuralError, "slice and map use different alphabets");
  MapTrie out(map.arity());
  std::vector<MapTrie::Position> dp(map.arity());
  for (std::size_t g = 0; g < map.arity(); ++g) dp[g] = map.step(map.root_position(), static_cast<Symbol>(g));
  Composer(map, slice.trie, out, max_nodes).build(out.root(), slice.trie.root_position(), std::move(dp));
  if (out.stored_nodes() > max_nodes) throw Error(ErrorCode::NodeBudgetExceeded, "composed trie exceeds the node budget");
  return out;
}

MapTrie compose_by_grafting(const MapTrie& map, const UpdateSlice& slice) {
  const auto explicit_slice = slice.trie.expanded();
  MapTrie out = explicit_slice.transform([](const Symbol&) { return Window{}; });
  for (const auto& [s, g] : explicit_slice.leaves()) {
    const Context sg = s.then(g);
    auto hit = map.lookup(sg);
    if (hit.found) {
      out = out.grafted(s, MapTrie(map.arity(), *hit.label));
    } else {
      out = out.grafted(s, map.subtree(sg));
    }
  }
  return out;
}

StepRecord step(EngineState& state, double u, const Kernel& kernel, const StepOptions& options) {
  if (state.coalesced()) throw Error(ErrorCode::InvalidArgument, "step on a coalesced state");
  const std::int64_t t = state.t - 1;
  UpdateSlice slice = build_slice(kernel, u, options.max_depth);
  MapTrie composed = compose(state.map, slice, options.max_nodes);
  MapTrie pruned = composed.pruned();
  if (options.check_invariants) check_step(state, composed, pruned, slice, kernel, options, t);
  StepRecord rec;
  rec.t = t;
  rec.leaves = pruned.leaf_count();
  rec.depth = pruned.depth();
  rec.node_touches = slice.node_touches + composed.stored_nodes();
  rec.slice_depth = slice.depth;
  rec.regeneration = detect_regeneration(slice);
  state.map = std::move(pruned);
  state.t = t;
  return rec;
}

namespace {

void note(RunDiagnostics& diag, const StepRecord& rec, bool keep) {
  ++diag.iterations;
  diag.total_node_touches += rec.node_touches;
  if (rec.regeneration) diag.regeneration_times.push_back(rec.t);
  if (keep) diag.records.push_back(rec);
}

}  // namespace

RunResult run(const Kernel& kernel, std::size_t window, RngStream& rng, const Limits& limits, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  EngineState state = init(kernel.alphabet(), window);
  std::optional<CsdTrie> closure;
  StepOptions step_options{limits.max_depth, limits.max_nodes, options.check_invariants, nullptr};
  if (options.check_invariants) {
    closure = closure_for(kernel);
    if (closure) step_options.closure = &*closure;
  }
  RunResult result;
  RunDiagnostics& diag = result.diagnostics;
  diag.seed = rng.seed();
  while (!state.coalesced()) {
    if (diag.iterations >= limits.max_iter) {
      diag.tau = state.t;
      diag.wall_ns = elapsed_ns(start);
      throw RunAborted(Error(ErrorCode::IterationLimitExceeded, "no coalescence within the iteration budget"), diag);
    }
    const double u = rng.next_uniform();
    try {
      note(diag, step(state, u, kernel, step_options), options.keep_records);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MaxDepthExceeded && e.code() != ErrorCode::NodeBudgetExceeded) throw;
      diag.tau = state.t;
      diag.wall_ns = elapsed_ns(start);
      throw RunAborted(e, diag);
    }
  }
  diag.tau = state.t;
  diag.wall_ns = elapsed_ns(start);
  result.sample = state.map.root_label();
  return result;
}

RunResult run(const Kernel& kernel, std::size_t window, std::uint64_t seed, const Limits& limits, const RunOptions& options) {
  RngStream rng(seed);
  return run(kernel, window, rng, limits, options);
}

RunResult pw_extended(const Kernel& kernel, std::size_t window, RngStream& rng, const Limits& limits,
                      const RunOptions& options) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window length must be at least 1");
  const auto order = kernel.order();
  if (!order) throw Error(ErrorCode::Unsupported, "the extended-chain baseline needs a kernel of finite order");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = kernel.alphabet().size();
  const std::size_t d = *order;
  auto power = [&](std::size_t k) {
    std::uint64_t p = 1;
    for (std::size_t i = 0; i < k; ++i) {
      p = detail::mul_sat(p, n);
      if (p > limits.max_nodes) throw Error(ErrorCode::NodeBudgetExceeded, "extended state space exceeds the node budget");
    }
    return p;
  };
  auto decode = [&](std::uint64_t idx, std::size_t len) {
    std::vector<Symbol> w(len);
    for (std::size_t i = len; i-- > 0;) {
      w[i] = static_cast<Symbol>(idx % n);
      idx /= n;
    }
    return w;
  };

  // labels[idx]: index of the window forced by the history whose last
  // `depth` symbols encode to idx (most recent symbol least significant).
  std::size_t depth = window;
  std::vector<std::uint64_t> labels(power(window));
  for (std::uint64_t i = 0; i < labels.size(); ++i) labels[i] = i;

  RunResult result;
  RunDiagnostics& diag = result.diagnostics;
  diag.seed = rng.seed();
  std::int64_t t = 0;
  bool coalesced = false;
  while (!coalesced) {
    if (diag.iterations >= limits.max_iter) {
      diag.tau = t;
      diag.wall_ns = elapsed_ns(start);
      throw RunAborted(Error(ErrorCode::IterationLimitExceeded, "no coalescence within the iteration budget"), diag);
    }
    const double u = rng.next_uniform();
    --t;
    const std::size_t elapsed = static_cast<std::size_t>(-t);
    const std::size_t next_depth = std::max(d, window > elapsed ? window - elapsed : 0);
    StepRecord rec;
    rec.t = t;
    std::vector<std::uint64_t> next;
    std::uint64_t touches = 0;
    try {
      const std::uint64_t size = power(next_depth);
      const std::uint64_t prev_size = power(depth);
      next.resize(size);
      for (std::uint64_t idx = 0; idx < size; ++idx) {
        const Context h(decode(idx, next_depth));
        LevelAccumulator acc(n);
        std::optional<Symbol> g;
        for (std::size_t level = 0; level <= h.size() && !g; ++level) {
          g = acc.push_and_find(kernel.lower_bounds(h.suffix(level)), u);
          ++touches;
        }
        if (!g) throw Error(ErrorCode::StructuralError, "update rule undecided at the kernel order");
        next[idx] = labels[(idx * n + *g) % prev_size];
      }
      // Nodes of the complete trie over the new state space.
      std::uint64_t nodes = 0;
      for (std::size_t k = 0; k <= next_depth; ++k) nodes += power(k);
      rec.node_touches = touches + nodes;
      rec.leaves = size;
      rec.depth = next_depth;
      rec.slice_depth = 0;
      rec.regeneration = phi(kernel, u, Context{}).has_value();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NodeBudgetExceeded) throw;
      diag.tau = t + 1;
      diag.wall_ns = elapsed_ns(start);
      throw RunAborted(e, diag);
    }
    labels = std::move(next);
    depth = next_depth;
    coalesced = std::all_of(labels.begin(), labels.end(), [&](std::uint64_t v) { return v == labels[0]; });
    note(diag, rec, options.keep_records);
  }
  diag.tau = t;
  diag.wall_ns = elapsed_ns(start);
  result.sample = decode(labels[0], window);
  return result;
}

RunResult pw_extended(const Kernel& kernel, std::size_t window, std::uint64_t seed, const Limits& limits,
                      const RunOptions& options) {
  RngStream rng(seed);
  return pw_extended(kernel, window, rng, limits, options);
}

}  // namespace ciaftp
