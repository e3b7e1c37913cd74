#include "ciaftp/dictionary.hpp"

namespace ciaftp {

CsdTrie prefix_closure(const CsdTrie& d) {
  if (d.has_runs()) throw Error(ErrorCode::Unsupported, "prefix closure needs a finite, run-free dictionary");
  CsdTrie out(d.arity());
  // Inserting a path expands every node on it fully, so the leaves of the
  // result are exactly the maximal inserted words. Completeness of `d`
  // guarantees every created sibling is itself a suffix of an inserted word.
  for (const Context& s : d.leaf_contexts()) {
    for (std::size_t len = 1; len <= s.size(); ++len) {
      Context p = s.prefix(len);
      CsdTrie::NodeId cur = out.root();
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (out.node(cur).kind == CsdTrie::Kind::Leaf) out.expand(cur);
        cur = out.child(cur, p.recent(i));
      }
    }
  }
  return out;
}

CsdTrie make_dictionary(std::size_t arity, const std::vector<Context>& contexts, const Alphabet* names) {
  std::vector<std::pair<Context, NoLabel>> entries;
  entries.reserve(contexts.size());
  for (const auto& c : contexts) entries.emplace_back(c, NoLabel{});
  return CsdTrie::from_leaves(arity, entries, names);
}

}  // namespace ciaftp
