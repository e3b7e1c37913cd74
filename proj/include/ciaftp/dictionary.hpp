#pragma once

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ciaftp/alphabet.hpp"
#include "ciaftp/trie.hpp"

namespace ciaftp {

/// True iff every leaf of `fine` has a suffix among the leaves of `coarse`
/// (fine ⪰ coarse: the trie of `fine` shadows that of `coarse`).
template <class A, class B>
bool dominates(const LabeledTrie<A>& fine, const LabeledTrie<B>& coarse) {
  if (fine.arity() != coarse.arity()) return false;
  using PF = typename LabeledTrie<A>::Position;
  using PC = typename LabeledTrie<B>::Position;
  std::vector<std::pair<PF, PC>> stack{{fine.root_position(), coarse.root_position()}};
  while (!stack.empty()) {
    auto [pf, pc] = stack.back();
    stack.pop_back();
    if (coarse.is_leaf(pc)) continue;
    if (fine.is_leaf(pf)) return false;
    // Both on spines of the same symbol: side children are leaves on both
    // sides, so only the spine itself needs following.
    if (fine.on_run(pf) && coarse.on_run(pc) && fine.run_symbol(pf) == coarse.run_symbol(pc)) {
      Symbol a = fine.run_symbol(pf);
      std::uint64_t k = std::min(fine.run_remaining(pf), coarse.run_remaining(pc));
      stack.push_back({fine.advance(pf, a, k), coarse.advance(pc, a, k)});
      continue;
    }
    for (std::size_t b = 0; b < fine.arity(); ++b)
      stack.push_back({fine.step(pf, static_cast<Symbol>(b)), coarse.step(pc, static_cast<Symbol>(b))});
  }
  return true;
}

/// The minimal prefix-closed complete dictionary dominating `d`: the maximal
/// elements (for ⪰) of the set of all non-empty prefixes of leaves of `d`.
CsdTrie prefix_closure(const CsdTrie& d);

/// Unlabeled dictionary from a list of contexts (validated for completeness
/// and overlap).
CsdTrie make_dictionary(std::size_t arity, const std::vector<Context>& contexts, const Alphabet* names = nullptr);

template <class L>
CsdTrie shape_of(const LabeledTrie<L>& t) {
  return t.transform([](const L&) { return NoLabel{}; });
}

namespace detail {

struct RunLengthWord {
  std::vector<std::pair<Symbol, std::uint64_t>> runs;  // most-recent first

  void push(Symbol g, std::uint64_t n = 1) {
    if (n == 0) return;
    if (!runs.empty() && runs.back().first == g) {
      runs.back().second += n;
    } else {
      runs.emplace_back(g, n);
    }
  }
  void pop(std::uint64_t n = 1) {
    while (n > 0) {
      auto& back = runs.back();
      std::uint64_t k = std::min(n, back.second);
      back.second -= k;
      n -= k;
      if (back.second == 0) runs.pop_back();
    }
  }
  std::string format(const Alphabet& names) const {
    if (runs.empty()) return "ε";
    std::string out;
    bool first = true;
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
      const std::string& n = names.name(it->first);
      auto sep = [&] {
        if (!first && !names.single_char()) out += ',';
        first = false;
      };
      if (it->second > 4) {
        sep();
        out += n + "^" + std::to_string(it->second);
      } else {
        for (std::uint64_t i = 0; i < it->second; ++i) {
          sep();
          out += n;
        }
      }
    }
    return out;
  }
};

}  // namespace detail

/// Indented text rendering, one node per line, contexts written
/// oldest-to-newest. Runs are written as `a^m` blocks.
template <class L>
std::string dump_text(const LabeledTrie<L>& t, const Alphabet& names,
                      const std::function<std::string(const L&)>& show_label = nullptr) {
  using Trie = LabeledTrie<L>;
  std::ostringstream out;
  detail::RunLengthWord word;
  std::function<void(typename Trie::NodeId, std::size_t)> rec = [&](typename Trie::NodeId id, std::size_t indent) {
    const auto& n = t.node(id);
    out << std::string(indent * 2, ' ') << word.format(names);
    if (n.kind == Trie::Kind::Leaf) {
      if (show_label) out << " : " << show_label(n.label);
      out << '\n';
    } else if (n.kind == Trie::Kind::Branch) {
      out << '\n';
      for (std::size_t b = 0; b < t.arity(); ++b) {
        word.push(static_cast<Symbol>(b));
        rec(n.link + static_cast<typename Trie::NodeId>(b), indent + 1);
        word.pop();
      }
    } else {
      out << " [spine " << names.name(n.run_symbol) << "^" << n.run_length << ", other children";
      if (show_label) out << " : " << show_label(n.label);
      out << "]\n";
      word.push(n.run_symbol, n.run_length);
      rec(n.link, indent + 1);
      word.pop(n.run_length);
    }
  };
  rec(t.root(), 0);
  return out.str();
}

/// Graphviz rendering; leaves are boxes showing their label.
template <class L>
std::string dump_dot(const LabeledTrie<L>& t, const Alphabet& names,
                     const std::function<std::string(const L&)>& show_label = nullptr) {
  using Trie = LabeledTrie<L>;
  std::ostringstream out;
  out << "digraph trie {\n  node [fontname=\"monospace\"];\n";
  detail::RunLengthWord word;
  std::size_t counter = 0;
  auto quote = [](const std::string& s) {
    std::string q;
    for (char c : s) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q;
  };
  std::function<std::size_t(typename Trie::NodeId)> rec = [&](typename Trie::NodeId id) {
    std::size_t me = counter++;
    const auto& n = t.node(id);
    std::string text = word.format(names);
    if (n.kind == Trie::Kind::Leaf) {
      out << "  n" << me << " [shape=box, label=\"" << quote(text) << (show_label ? "\\n" + quote(show_label(n.label)) : "")
          << "\"];\n";
    } else if (n.kind == Trie::Kind::Branch) {
      out << "  n" << me << " [shape=circle, label=\"" << quote(text) << "\"];\n";
      for (std::size_t b = 0; b < t.arity(); ++b) {
        word.push(static_cast<Symbol>(b));
        std::size_t c = rec(n.link + static_cast<typename Trie::NodeId>(b));
        word.pop();
        out << "  n" << me << " -> n" << c << " [label=\"" << quote(names.name(static_cast<Symbol>(b))) << "\"];\n";
      }
    } else {
      std::string side = show_label ? " : " + show_label(n.label) : "";
      out << "  n" << me << " [shape=doublecircle, label=\"" << quote(text) << "\\nspine " << quote(names.name(n.run_symbol))
          << "^" << n.run_length << quote(side) << "\"];\n";
      word.push(n.run_symbol, n.run_length);
      std::size_t c = rec(n.link);
      word.pop(n.run_length);
      out << "  n" << me << " -> n" << c << " [label=\"" << quote(names.name(n.run_symbol)) << "^" << n.run_length << "\"];\n";
    }
    return me;
  };
  rec(t.root());
  out << "}\n";
  return out.str();
}

}  // namespace ciaftp
