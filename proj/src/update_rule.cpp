#include "ciaftp/update_rule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ciaftp {

std::vector<IntervalAssignment> LevelAccumulator::push(const LowerBoundRow& row) {
  const std::size_t n = previous_.size();
  if (row.a.size() != n) throw Error(ErrorCode::StructuralError, "lower-bound row has the wrong arity");
  std::vector<IntervalAssignment> out(n);
  double c = cursor_;
  std::size_t last_nonempty = n - 1;
  for (std::size_t g = 0; g < n; ++g) {
    const double width = std::max(0.0, row.a[g] - previous_[g]);
    out[g] = IntervalAssignment{levels_, static_cast<Symbol>(g), c, c + width};
    c = out[g].beta;
    if (width > 0.0) last_nonempty = g;
  }
  if (row.resolved || c >= 1.0) {
    // Close the layout at 1: rounding leftovers go to the last interval.
    for (auto& iv : out) {
      iv.alpha = std::min(iv.alpha, 1.0);
      iv.beta = std::min(iv.beta, 1.0);
    }
    out[last_nonempty].beta = 1.0;
    for (std::size_t g = last_nonempty + 1; g < n; ++g) out[g].alpha = out[g].beta = 1.0;
    c = 1.0;
  }
  previous_ = row.a;
  cursor_ = c;
  ++levels_;
  return out;
}

std::optional<Symbol> LevelAccumulator::push_and_find(const LowerBoundRow& row, double u) {
  for (const auto& iv : push(row))
    if (iv.alpha <= u && u < iv.beta) return iv.symbol;
  return std::nullopt;
}

std::vector<IntervalAssignment> interval_table(const Kernel& k, const Context& w, double u_cap) {
  LevelAccumulator acc(k.alphabet().size());
  std::vector<IntervalAssignment> out;
  for (std::size_t level = 0; level <= w.size(); ++level) {
    LowerBoundRow row = k.lower_bounds(w.suffix(level));
    auto ivs = acc.push(row);
    out.insert(out.end(), ivs.begin(), ivs.end());
    if (row.resolved || acc.cursor() > u_cap) break;
  }
  return out;
}

std::optional<Symbol> phi(const Kernel& k, double u, const Context& s) {
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::InvalidArgument, "draw must lie in [0, 1)");
  LevelAccumulator acc(k.alphabet().size());
  for (std::size_t level = 0; level <= s.size(); ++level)
    if (auto g = acc.push_and_find(k.lower_bounds(s.suffix(level)), u)) return g;
  return std::nullopt;
}

double coupling_mass(const Kernel& k, const Context& s) {
  LevelAccumulator acc(k.alphabet().size());
  for (std::size_t level = 0; level <= s.size(); ++level) acc.push(k.lower_bounds(s.suffix(level)));
  return acc.cursor();
}

UpdateSlice build_slice(const Kernel& k, double u, std::size_t max_depth, bool use_hints) {
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::InvalidArgument, "draw must lie in [0, 1)");
  if (max_depth == 0) throw Error(ErrorCode::InvalidArgument, "max_depth must be at least 1");
  using Trie = LabeledTrie<Symbol>;
  const std::size_t n = k.alphabet().size();
  struct Frame {
    Trie::NodeId id;
    Context ctx;
    LevelAccumulator acc;
    std::size_t explicit_depth;
  };
  Trie t(n, 0);
  std::uint64_t touches = 0;
  std::vector<Frame> stack;
  stack.push_back(Frame{t.root(), Context{}, LevelAccumulator(n), 0});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    ++touches;
    if (auto g = f.acc.push_and_find(k.lower_bounds(f.ctx), u)) {
      t.set_label(f.id, *g);
      continue;
    }
    if (use_hints) {
      if (auto hint = k.spine(f.ctx, u)) {
        Trie::NodeId tail = t.make_run(f.id, hint->symbol, hint->length, hint->side);
        t.set_label(tail, hint->terminal);
        touches += 1;
        continue;
      }
    }
    if (f.explicit_depth >= max_depth) {
      std::ostringstream msg;
      msg << "slice for u = " << u << " not resolved within depth " << max_depth;
      throw Error(ErrorCode::MaxDepthExceeded, msg.str());
    }
    Trie::NodeId first = t.expand(f.id);
    for (std::size_t b = n; b-- > 0;)
      stack.push_back(Frame{first + static_cast<Trie::NodeId>(b), f.ctx.preceded_by(static_cast<Symbol>(b)), f.acc,
                            f.explicit_depth + 1});
  }
  UpdateSlice slice;
  slice.u = u;
  slice.trie = t.pruned();
  slice.depth = slice.trie.depth();
  slice.node_touches = touches;
  return slice;
}

MeasureReport verify_measure(const Kernel& k, const Context& w, double tolerance) {
  LowerBoundRow full = k.lower_bounds(w);
  if (!full.resolved) throw Error(ErrorCode::InvalidArgument, "context does not resolve the kernel");
  MeasureReport rep;
  rep.expected = full.a;
  rep.intervals = interval_table(k, w, 1.0);
  rep.mass.assign(k.alphabet().size(), 0.0);
  auto fail = [&](const std::string& what) {
    rep.ok = false;
    rep.failures.push_back(what);
  };
  constexpr double kPartitionTol = 1e-12;
  double expect_alpha = 0.0;
  for (const auto& iv : rep.intervals) {
    std::ostringstream where;
    where.precision(17);
    where << "level " << iv.level << " symbol " << k.alphabet().name(iv.symbol) << " [" << iv.alpha << ", " << iv.beta << ")";
    if (iv.alpha > iv.beta) fail("reversed interval " + where.str());
    if (std::fabs(iv.alpha - expect_alpha) > kPartitionTol) fail("gap or overlap before " + where.str());
    if (iv.alpha < 0.0 || iv.beta > 1.0) fail("interval outside [0, 1): " + where.str());
    rep.mass[iv.symbol] += iv.beta - iv.alpha;
    expect_alpha = iv.beta;
  }
  rep.coverage = expect_alpha;
  if (std::fabs(rep.coverage - 1.0) > kPartitionTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "intervals cover [0, " << rep.coverage << ")";
    fail(msg.str());
  }
  for (std::size_t g = 0; g < rep.mass.size(); ++g) {
    if (std::fabs(rep.mass[g] - rep.expected[g]) > tolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "symbol " << k.alphabet().name(static_cast<Symbol>(g)) << ": interval mass " << rep.mass[g] << " vs P = "
          << rep.expected[g];
      fail(msg.str());
    }
  }
  return rep;
}

}  // namespace ciaftp
