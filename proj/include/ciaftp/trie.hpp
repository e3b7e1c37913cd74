#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ciaftp/alphabet.hpp"
#include "ciaftp/error.hpp"

namespace ciaftp {

/// Label type for plain (unlabeled) complete suffix dictionaries.
struct NoLabel {
  friend bool operator==(NoLabel, NoLabel) { return true; }
};

namespace detail {
inline std::uint64_t add_sat(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}
inline std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}
}  // namespace detail

/// A |G|-ary trie whose leaves carry labels: the representation of a
/// piecewise-constant map on histories. The edge leaving the root is the most
/// recent symbol, so a node at depth k is the context w_{-k}..w_{-1}.
///
/// Nodes live in an arena. A Branch owns |G| consecutive children starting
/// at `link`. A Run is a compressed spine: it stands for `run_length` nested
/// nodes along `run_symbol`, each of whose other children is a leaf carrying
/// the run's `label`; `link` is the node reached after the whole spine.
/// Runs only appear for kernels with unbounded memory, where a single slice
/// may be arbitrarily deep.
template <class Label>
class LabeledTrie {
 public:
  using NodeId = std::uint32_t;
  using LabelType = Label;
  enum class Kind : std::uint8_t { Leaf, Branch, Run };

  struct Node {
    Kind kind = Kind::Leaf;
    Symbol run_symbol = 0;
    std::uint64_t run_length = 0;
    NodeId link = 0;
    Label label{};
  };

  /// Cursor into the expanded trie: a stored node, a spine offset inside a
  /// Run, or a virtual side leaf of a Run.
  struct Position {
    NodeId node = 0;
    std::uint64_t offset = 0;
    bool side = false;
  };

  struct Lookup {
    bool found = false;       // false: the context ends at an internal node
    std::size_t depth = 0;    // length of the matching leaf context
    const Label* label = nullptr;
  };

  explicit LabeledTrie(std::size_t arity = 2, Label root_label = {}) : arity_(arity) {
    if (arity == 0 || arity > 255) throw Error(ErrorCode::InvalidArgument, "trie arity must be in [1, 255]");
    nodes_.push_back(Node{Kind::Leaf, 0, 0, 0, std::move(root_label)});
  }

  /// Complete trie of the given depth; `label_of(context)` labels each leaf.
  template <class F>
  static LabeledTrie complete(std::size_t arity, std::size_t depth, F&& label_of) {
    LabeledTrie t(arity);
    std::vector<Symbol> recent_first;
    t.fill_complete(t.root(), depth, recent_first, label_of);
    return t;
  }

  /// Builds the trie whose leaves are exactly `entries`. Throws
  /// Error(OverlappingContexts) when one context is a suffix of another and
  /// Error(IncompleteDictionary) when some history has no suffix among them.
  static LabeledTrie from_leaves(std::size_t arity, const std::vector<std::pair<Context, Label>>& entries,
                                 const Alphabet* names = nullptr) {
    LabeledTrie t(arity);
    std::vector<char> assigned(1, 0);
    auto show = [&](const Context& c) {
      if (names) return "'" + names->format(c) + "'";
      std::string s = "'";
      for (Symbol g : c.symbols()) s += std::to_string(g) + (c.size() > 1 ? "," : "");
      return s + "'";
    };
    for (const auto& [ctx, label] : entries) {
      for (Symbol g : ctx.symbols())
        if (g >= arity) throw Error(ErrorCode::UnknownSymbol, "context " + show(ctx) + " has a symbol outside the alphabet");
      NodeId cur = t.root();
      for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (t.nodes_[cur].kind == Kind::Leaf) {
          if (assigned[cur])
            throw Error(ErrorCode::OverlappingContexts,
                        "context " + show(ctx.suffix(i)) + " is a suffix of " + show(ctx));
          NodeId first = t.expand(cur);
          assigned.resize(t.nodes_.size(), 0);
          (void)first;
        }
        cur = t.child(cur, ctx.recent(i));
      }
      if (t.nodes_[cur].kind != Kind::Leaf || assigned[cur]) {
        throw Error(ErrorCode::OverlappingContexts, "context " + show(ctx) + " overlaps another context of the dictionary");
      }
      assigned[cur] = 1;
      t.nodes_[cur].label = label;
    }
    // Every unassigned leaf is a set of histories with no suffix in the dictionary.
    std::vector<std::pair<NodeId, std::vector<Symbol>>> stack{{t.root(), {}}};
    while (!stack.empty()) {
      auto [id, recent_first] = std::move(stack.back());
      stack.pop_back();
      const Node& n = t.nodes_[id];
      if (n.kind == Kind::Leaf) {
        if (!assigned[id]) {
          Context c(std::vector<Symbol>(recent_first.rbegin(), recent_first.rend()));
          throw Error(ErrorCode::IncompleteDictionary, "histories ending in " + show(c) + " have no suffix in the dictionary");
        }
        continue;
      }
      for (std::size_t b = arity; b-- > 0;) {
        auto next = recent_first;
        next.push_back(static_cast<Symbol>(b));
        stack.push_back({n.link + static_cast<NodeId>(b), std::move(next)});
      }
    }
    return t;
  }

  std::size_t arity() const noexcept { return arity_; }
  NodeId root() const noexcept { return 0; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t stored_nodes() const noexcept { return nodes_.size(); }
  bool is_root_leaf() const { return nodes_[0].kind == Kind::Leaf; }
  const Label& root_label() const { return nodes_[0].label; }

  bool has_runs() const {
    return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kind == Kind::Run; });
  }

  NodeId child(NodeId branch, Symbol b) const { return nodes_[branch].link + static_cast<NodeId>(b); }

  // ---- construction primitives -------------------------------------------

  /// Turns a leaf into a branch. The new children inherit the leaf's label.
  /// Returns the id of the first child; child b is `first + b`.
  NodeId expand(NodeId leaf) {
    require_leaf(leaf);
    Label inherited = nodes_[leaf].label;
    NodeId first = checked_size(arity_);
    for (std::size_t b = 0; b < arity_; ++b) nodes_.push_back(Node{Kind::Leaf, 0, 0, 0, inherited});
    Node& n = nodes_[leaf];
    n.kind = Kind::Branch;
    n.link = first;
    n.label = Label{};
    return first;
  }

  /// Turns a leaf into a Run spine of `length` nodes along `symbol` whose side
  /// leaves carry `side`. Returns the id of the (leaf) node ending the spine.
  NodeId make_run(NodeId leaf, Symbol symbol, std::uint64_t length, Label side) {
    require_leaf(leaf);
    if (length == 0) return leaf;
    if (symbol >= arity_) throw Error(ErrorCode::StructuralError, "run symbol outside the alphabet");
    if (arity_ < 2) throw Error(ErrorCode::StructuralError, "runs need at least two symbols");
    Label inherited = nodes_[leaf].label;
    NodeId next = checked_size(1);
    nodes_.push_back(Node{Kind::Leaf, 0, 0, 0, std::move(inherited)});
    Node& n = nodes_[leaf];
    n.kind = Kind::Run;
    n.run_symbol = symbol;
    n.run_length = length;
    n.link = next;
    n.label = std::move(side);
    return next;
  }

  void set_label(NodeId leaf, Label label) {
    require_leaf(leaf);
    nodes_[leaf].label = std::move(label);
  }

  /// Copies the expanded subtree of `src` at `from` onto the leaf `target`.
  template <class SrcLabel, class F>
  void copy_into(NodeId target, const LabeledTrie<SrcLabel>& src, typename LabeledTrie<SrcLabel>::Position from,
                 F&& map_label) {
    if (src.is_leaf(from)) {
      set_label(target, map_label(src.leaf_label(from)));
      return;
    }
    const auto& n = src.node(from.node);
    if (n.kind == LabeledTrie<SrcLabel>::Kind::Branch) {
      NodeId first = expand(target);
      for (std::size_t b = 0; b < arity_; ++b)
        copy_into(first + static_cast<NodeId>(b), src, {n.link + static_cast<NodeId>(b), 0, false}, map_label);
    } else {
      NodeId next = make_run(target, n.run_symbol, n.run_length - from.offset, map_label(n.label));
      copy_into(next, src, {n.link, 0, false}, map_label);
    }
  }

  void copy_into(NodeId target, const LabeledTrie& src, Position from) {
    copy_into(target, src, from, [](const Label& l) { return l; });
  }

  // ---- positions ---------------------------------------------------------

  Position root_position() const { return Position{}; }

  bool is_leaf(const Position& p) const { return p.side || nodes_[p.node].kind == Kind::Leaf; }

  const Label& leaf_label(const Position& p) const { return nodes_[p.node].label; }

  bool on_run(const Position& p) const { return !p.side && nodes_[p.node].kind == Kind::Run; }

  Symbol run_symbol(const Position& p) const { return nodes_[p.node].run_symbol; }

  std::uint64_t run_remaining(const Position& p) const { return nodes_[p.node].run_length - p.offset; }

  /// Moves one symbol further into the past. A leaf absorbs every step.
  Position step(const Position& p, Symbol b) const {
    if (p.side) return p;
    const Node& n = nodes_[p.node];
    switch (n.kind) {
      case Kind::Leaf: return p;
      case Kind::Branch: return Position{n.link + static_cast<NodeId>(b), 0, false};
      case Kind::Run:
        if (b != n.run_symbol) return Position{p.node, p.offset, true};
        if (p.offset + 1 < n.run_length) return Position{p.node, p.offset + 1, false};
        return Position{n.link, 0, false};
    }
    return p;
  }

  /// `count` steps along the same symbol, skipping through Runs in one go.
  Position advance(Position p, Symbol a, std::uint64_t count) const {
    while (count > 0 && !is_leaf(p)) {
      const Node& n = nodes_[p.node];
      if (n.kind == Kind::Run && n.run_symbol == a) {
        std::uint64_t k = std::min(count, n.run_length - p.offset);
        count -= k;
        p.offset += k;
        if (p.offset == n.run_length) p = Position{n.link, 0, false};
      } else {
        p = step(p, a);
        --count;
      }
    }
    return p;
  }

  // ---- queries -----------------------------------------------------------

  /// The unique leaf that is a suffix of `h`, or found = false when `h` is
  /// too short to reach a leaf.
  Lookup lookup(const Context& h) const {
    Position p = root_position();
    std::size_t consumed = 0;
    while (!is_leaf(p)) {
      if (consumed == h.size()) return Lookup{false, consumed, nullptr};
      Symbol b = h.recent(consumed);
      if (b >= arity_) throw Error(ErrorCode::UnknownSymbol, "context symbol outside the alphabet");
      p = step(p, b);
      ++consumed;
    }
    return Lookup{true, consumed, &leaf_label(p)};
  }

  /// Depth of the deepest leaf (saturating).
  std::uint64_t depth() const {
    return fold<std::uint64_t>(
        [](const Node&) { return std::uint64_t{0}; },
        [](const std::vector<std::uint64_t>& ch) { return 1 + *std::max_element(ch.begin(), ch.end()); },
        [](const Node& n, std::uint64_t next) { return detail::add_sat(n.run_length, next); });
  }

  std::uint64_t leaf_count() const {
    const std::uint64_t side = arity_ - 1;
    return fold<std::uint64_t>(
        [](const Node&) { return std::uint64_t{1}; },
        [](const std::vector<std::uint64_t>& ch) {
          std::uint64_t s = 0;
          for (auto c : ch) s = detail::add_sat(s, c);
          return s;
        },
        [side](const Node& n, std::uint64_t next) { return detail::add_sat(detail::mul_sat(n.run_length, side), next); });
  }

  /// Number of nodes of the expanded trie, internal nodes included.
  std::uint64_t node_count() const {
    const std::uint64_t arity = arity_;
    return fold<std::uint64_t>(
        [](const Node&) { return std::uint64_t{1}; },
        [](const std::vector<std::uint64_t>& ch) {
          std::uint64_t s = 1;
          for (auto c : ch) s = detail::add_sat(s, c);
          return s;
        },
        [arity](const Node& n, std::uint64_t next) { return detail::add_sat(detail::mul_sat(n.run_length, arity), next); });
  }

  /// Calls f(context, label) for every leaf in depth-first order (children in
  /// symbol order). Runs are expanded; throws Error(Unsupported) when more
  /// than `max_leaves` leaves would be produced.
  template <class F>
  void for_each_leaf(F&& f, std::uint64_t max_leaves = std::uint64_t{1} << 22) const {
    if (leaf_count() > max_leaves) throw Error(ErrorCode::Unsupported, "trie has too many leaves to enumerate");
    std::vector<Symbol> recent_first;
    walk_leaves(root(), recent_first, f);
  }

  std::vector<std::pair<Context, Label>> leaves(std::uint64_t max_leaves = std::uint64_t{1} << 22) const {
    std::vector<std::pair<Context, Label>> out;
    for_each_leaf([&](const Context& c, const Label& l) { out.emplace_back(c, l); }, max_leaves);
    return out;
  }

  std::vector<Context> leaf_contexts(std::uint64_t max_leaves = std::uint64_t{1} << 22) const {
    std::vector<Context> out;
    for_each_leaf([&](const Context& c, const Label&) { out.push_back(c); }, max_leaves);
    return out;
  }

  /// Position of the node for context `at`; throws if a leaf is met first.
  Position position_of(const Context& at) const {
    Position p = root_position();
    for (std::size_t i = 0; i < at.size(); ++i) {
      if (is_leaf(p)) throw Error(ErrorCode::StructuralError, "context runs past a leaf of the trie");
      p = step(p, at.recent(i));
    }
    return p;
  }

  /// Copy of the subtree rooted at context `at`, re-rooted at ε.
  LabeledTrie subtree(const Context& at) const {
    LabeledTrie out(arity_);
    out.copy_into(out.root(), *this, position_of(at));
    return out;
  }

  /// Replaces the leaf `at` by a copy of `sub`. The new leaves are the
  /// contexts h·at for h a leaf of `sub`.
  LabeledTrie grafted(const Context& at, const LabeledTrie& sub) const {
    if (sub.arity() != arity_) throw Error(ErrorCode::StructuralError, "graft across different alphabets");
    LabeledTrie out = *this;
    NodeId cur = out.root();
    for (std::size_t i = 0; i < at.size(); ++i) {
      const Node& n = out.nodes_[cur];
      if (n.kind != Kind::Branch) throw Error(ErrorCode::StructuralError, "graft point is not a leaf of the trie");
      cur = out.child(cur, at.recent(i));
    }
    if (out.nodes_[cur].kind != Kind::Leaf) throw Error(ErrorCode::StructuralError, "graft point is not a leaf of the trie");
    out.copy_into(cur, sub, sub.root_position());
    return out;
  }

  /// The same map with every Run spelled out as Branch nodes. Throws
  /// Error(Unsupported) above `max_nodes` expanded nodes.
  LabeledTrie expanded(std::uint64_t max_nodes = std::uint64_t{1} << 22) const {
    if (node_count() > max_nodes) throw Error(ErrorCode::Unsupported, "trie too large to expand");
    LabeledTrie out(arity_);
    std::vector<std::pair<NodeId, Position>> stack{{out.root(), root_position()}};
    while (!stack.empty()) {
      auto [dst, p] = stack.back();
      stack.pop_back();
      if (is_leaf(p)) {
        out.nodes_[dst].label = leaf_label(p);
        continue;
      }
      NodeId first = out.expand(dst);
      for (std::size_t b = 0; b < arity_; ++b) stack.push_back({first + static_cast<NodeId>(b), step(p, static_cast<Symbol>(b))});
    }
    return out;
  }

  /// The minimal trie representing the same map: nodes whose children are
  /// all leaves with equal labels are collapsed, recursively. Adjacent runs
  /// with the same symbol and side label are merged.
  LabeledTrie pruned() const {
    std::vector<const Label*> collapsed(nodes_.size(), nullptr);
    compute_collapse(root(), collapsed);
    LabeledTrie out(arity_);
    out.nodes_.reserve(nodes_.size());
    emit_pruned(root(), out, out.root(), collapsed);
    return out;
  }

  bool is_minimal() const {
    bool ok = true;
    visit(root(), [&](NodeId id) {
      const Node& n = nodes_[id];
      if (n.kind == Kind::Branch) {
        bool all_leaves = true;
        for (std::size_t b = 0; b < arity_ && all_leaves; ++b) {
          const Node& c = nodes_[n.link + b];
          all_leaves = c.kind == Kind::Leaf && c.label == nodes_[n.link].label;
        }
        if (all_leaves) ok = false;
      } else if (n.kind == Kind::Run) {
        const Node& next = nodes_[n.link];
        if (next.kind == Kind::Leaf && next.label == n.label) ok = false;
      }
    });
    return ok;
  }

  /// Structural check: every reachable node is well formed and reached once.
  void validate() const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{root()};
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (id >= nodes_.size()) throw Error(ErrorCode::StructuralError, "dangling node reference");
      if (seen[id]) throw Error(ErrorCode::StructuralError, "node reachable twice");
      seen[id] = 1;
      const Node& n = nodes_[id];
      if (n.kind == Kind::Branch) {
        if (std::size_t(n.link) + arity_ > nodes_.size()) throw Error(ErrorCode::StructuralError, "incomplete branch");
        for (std::size_t b = 0; b < arity_; ++b) stack.push_back(n.link + static_cast<NodeId>(b));
      } else if (n.kind == Kind::Run) {
        if (n.run_length == 0 || n.run_symbol >= arity_) throw Error(ErrorCode::StructuralError, "malformed run");
        stack.push_back(n.link);
      }
    }
  }

  /// Same shape and labels, node-for-node.
  bool same_structure(const LabeledTrie& o) const {
    if (arity_ != o.arity_) return false;
    std::vector<std::pair<NodeId, NodeId>> stack{{root(), o.root()}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      const Node& x = nodes_[a];
      const Node& y = o.nodes_[b];
      if (x.kind != y.kind) return false;
      if (x.kind == Kind::Leaf) {
        if (!(x.label == y.label)) return false;
      } else if (x.kind == Kind::Run) {
        if (x.run_symbol != y.run_symbol || x.run_length != y.run_length || !(x.label == y.label)) return false;
        stack.push_back({x.link, y.link});
      } else {
        for (std::size_t g = 0; g < arity_; ++g)
          stack.push_back({x.link + static_cast<NodeId>(g), y.link + static_cast<NodeId>(g)});
      }
    }
    return true;
  }

  friend bool operator==(const LabeledTrie& a, const LabeledTrie& b) { return a.same_structure(b); }

  /// Same shape, labels mapped through f.
  template <class F>
  auto transform(F&& f) const -> LabeledTrie<std::decay_t<decltype(f(std::declval<const Label&>()))>> {
    using Out = std::decay_t<decltype(f(std::declval<const Label&>()))>;
    LabeledTrie<Out> out(arity_);
    out.copy_into(out.root(), *this, root_position(), f);
    return out;
  }

  /// Visits reachable stored nodes in pre-order.
  template <class F>
  void visit(NodeId start, F&& f) const {
    std::vector<NodeId> stack{start};
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      f(id);
      const Node& n = nodes_[id];
      if (n.kind == Kind::Branch) {
        for (std::size_t b = arity_; b-- > 0;) stack.push_back(n.link + static_cast<NodeId>(b));
      } else if (n.kind == Kind::Run) {
        stack.push_back(n.link);
      }
    }
  }

 private:
  template <class>
  friend class LabeledTrie;

  void require_leaf(NodeId id) const {
    if (id >= nodes_.size() || nodes_[id].kind != Kind::Leaf)
      throw Error(ErrorCode::StructuralError, "operation requires a leaf node");
  }

  NodeId checked_size(std::size_t extra) const {
    if (nodes_.size() + extra >= std::numeric_limits<NodeId>::max())
      throw Error(ErrorCode::NodeBudgetExceeded, "trie exceeds the addressable node count");
    return static_cast<NodeId>(nodes_.size());
  }

  template <class F>
  void fill_complete(NodeId id, std::size_t depth, std::vector<Symbol>& recent_first, F& label_of) {
    if (depth == 0) {
      nodes_[id].label = label_of(Context(std::vector<Symbol>(recent_first.rbegin(), recent_first.rend())));
      return;
    }
    NodeId first = expand(id);
    for (std::size_t b = 0; b < arity_; ++b) {
      recent_first.push_back(static_cast<Symbol>(b));
      fill_complete(first + static_cast<NodeId>(b), depth - 1, recent_first, label_of);
      recent_first.pop_back();
    }
  }

  template <class F>
  void walk_leaves(NodeId id, std::vector<Symbol>& recent_first, F& f) const {
    auto emit = [&](const Label& l) { f(Context(std::vector<Symbol>(recent_first.rbegin(), recent_first.rend())), l); };
    const Node& n = nodes_[id];
    if (n.kind == Kind::Leaf) {
      emit(n.label);
    } else if (n.kind == Kind::Branch) {
      for (std::size_t b = 0; b < arity_; ++b) {
        recent_first.push_back(static_cast<Symbol>(b));
        walk_leaves(n.link + static_cast<NodeId>(b), recent_first, f);
        recent_first.pop_back();
      }
    } else {
      std::size_t base = recent_first.size();
      for (std::uint64_t i = 0; i < n.run_length; ++i) {
        for (std::size_t b = 0; b < arity_; ++b) {
          if (b == n.run_symbol) continue;
          recent_first.push_back(static_cast<Symbol>(b));
          emit(n.label);
          recent_first.pop_back();
        }
        recent_first.push_back(n.run_symbol);
      }
      walk_leaves(n.link, recent_first, f);
      recent_first.resize(base);
    }
  }

  /// Post-order fold over stored nodes.
  template <class T, class LeafF, class BranchF, class RunF>
  T fold(LeafF leaf, BranchF branch, RunF run) const {
    std::vector<T> value(nodes_.size());
    std::vector<std::pair<NodeId, bool>> stack{{root(), false}};
    while (!stack.empty()) {
      auto [id, done] = stack.back();
      stack.pop_back();
      const Node& n = nodes_[id];
      if (n.kind == Kind::Leaf) {
        value[id] = leaf(n);
      } else if (!done) {
        stack.push_back({id, true});
        if (n.kind == Kind::Branch) {
          for (std::size_t b = 0; b < arity_; ++b) stack.push_back({n.link + static_cast<NodeId>(b), false});
        } else {
          stack.push_back({n.link, false});
        }
      } else if (n.kind == Kind::Branch) {
        std::vector<T> ch(arity_);
        for (std::size_t b = 0; b < arity_; ++b) ch[b] = value[n.link + b];
        value[id] = branch(ch);
      } else {
        value[id] = run(n, value[n.link]);
      }
    }
    return value[root()];
  }

  void compute_collapse(NodeId start, std::vector<const Label*>& collapsed) const {
    std::vector<std::pair<NodeId, bool>> stack{{start, false}};
    while (!stack.empty()) {
      auto [id, done] = stack.back();
      stack.pop_back();
      const Node& n = nodes_[id];
      if (n.kind == Kind::Leaf) {
        collapsed[id] = &n.label;
      } else if (!done) {
        stack.push_back({id, true});
        if (n.kind == Kind::Branch) {
          for (std::size_t b = 0; b < arity_; ++b) stack.push_back({n.link + static_cast<NodeId>(b), false});
        } else {
          stack.push_back({n.link, false});
        }
      } else if (n.kind == Kind::Branch) {
        const Label* first = collapsed[n.link];
        bool same = first != nullptr;
        for (std::size_t b = 1; b < arity_ && same; ++b) {
          const Label* c = collapsed[n.link + b];
          same = c != nullptr && *c == *first;
        }
        collapsed[id] = same ? first : nullptr;
      } else {
        const Label* next = collapsed[n.link];
        collapsed[id] = (next != nullptr && *next == n.label) ? &n.label : nullptr;
      }
    }
  }

  void emit_pruned(NodeId src, LabeledTrie& out, NodeId dst, const std::vector<const Label*>& collapsed) const {
    if (collapsed[src]) {
      out.nodes_[dst].label = *collapsed[src];
      return;
    }
    const Node& n = nodes_[src];
    if (n.kind == Kind::Branch) {
      NodeId first = out.expand(dst);
      for (std::size_t b = 0; b < arity_; ++b)
        emit_pruned(n.link + static_cast<NodeId>(b), out, first + static_cast<NodeId>(b), collapsed);
      return;
    }
    std::uint64_t length = n.run_length;
    NodeId next = n.link;
    while (!collapsed[next] && nodes_[next].kind == Kind::Run && nodes_[next].run_symbol == n.run_symbol &&
           nodes_[next].label == n.label) {
      length = detail::add_sat(length, nodes_[next].run_length);
      next = nodes_[next].link;
    }
    NodeId tail = out.make_run(dst, n.run_symbol, length, n.label);
    emit_pruned(next, out, tail, collapsed);
  }

  std::size_t arity_;
  std::vector<Node> nodes_;
};

using CsdTrie = LabeledTrie<NoLabel>;

}  // namespace ciaftp
