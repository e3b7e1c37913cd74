#include <doctest.h>

#include <algorithm>
#include <set>

#include "ciaftp/dictionary.hpp"
#include "support.hpp"

using namespace ciaftp;
using support::Rng;

namespace {

const Alphabet kBin = Alphabet::binary();

Context ctx(std::string_view text) { return kBin.parse(text); }

CsdTrie dict(std::initializer_list<const char*> words) {
  std::vector<Context> cs;
  for (const char* w : words) cs.push_back(ctx(w));
  return make_dictionary(2, cs, &kBin);
}

std::set<std::string> leaf_words(const CsdTrie& t) {
  std::set<std::string> out;
  for (const auto& c : t.leaf_contexts()) out.insert(kBin.format(c));
  return out;
}

// Maximal elements of the set of non-empty prefixes of the leaves, found by
// brute force over the suffix order.
std::set<Context> closure_by_enumeration(const std::vector<Context>& leaves) {
  std::set<Context> prefixes;
  for (const auto& s : leaves)
    for (std::size_t k = 1; k <= s.size(); ++k) prefixes.insert(s.prefix(k));
  std::set<Context> maximal;
  for (const auto& p : prefixes) {
    bool dominated = false;
    for (const auto& q : prefixes)
      if (q != p && is_suffix(p, q)) dominated = true;
    if (!dominated) maximal.insert(p);
  }
  if (maximal.empty()) maximal.insert(Context{});
  return maximal;
}

}  // namespace

TEST_CASE("is_suffix") {
  CHECK(is_suffix(Context{}, ctx("01")));
  CHECK(is_suffix(ctx("1"), ctx("01")));
  CHECK_FALSE(is_suffix(ctx("01"), ctx("1")));
  CHECK_FALSE(is_suffix(ctx("0"), ctx("01")));
  CHECK(is_suffix(ctx("01"), ctx("001")));
}

TEST_CASE("context accessors are oldest-to-newest") {
  Context c = ctx("011");
  CHECK(c.recent(0) == 1);
  CHECK(c.recent(2) == 0);
  CHECK(c.suffix(2) == ctx("11"));
  CHECK(c.prefix(1) == ctx("0"));
  CHECK(c.then(0) == ctx("0110"));
  CHECK(c.preceded_by(1) == ctx("1011"));
}

TEST_CASE("alphabet formatting and parsing") {
  CHECK(kBin.format(ctx("0110")) == "0110");
  Alphabet words({"a", "bb", "c"});
  CHECK_FALSE(words.single_char());
  Context c = words.parse("bb,a,c");
  CHECK(c == Context{1, 0, 2});
  CHECK(words.format(c) == "bb,a,c");
  CHECK(words.parse("").empty());
  CHECK_THROWS_AS(kBin.parse("012"), Error);
  try {
    kBin.parse("2");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSymbol);
  }
  CHECK_THROWS_AS(Alphabet({"0", "0"}), Error);
}

TEST_CASE("lookup_suffix") {
  CsdTrie t = dict({"0", "01", "11"});
  auto hit = t.lookup(ctx("10"));
  CHECK(hit.found);
  CHECK(hit.depth == 1);
  CHECK_FALSE(t.lookup(ctx("1")).found);
  CsdTrie root(2);
  auto r = root.lookup(ctx("0110"));
  CHECK(r.found);
  CHECK(r.depth == 0);

  auto labeled = LabeledTrie<int>::from_leaves(2, {{ctx("0"), 7}, {ctx("01"), 8}, {ctx("11"), 9}});
  CHECK(*labeled.lookup(ctx("0101")).label == 8);
  CHECK(*labeled.lookup(ctx("111")).label == 9);
}

TEST_CASE("dictionary construction errors") {
  try {
    dict({"0", "01"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteDictionary);
    CHECK(std::string(e.what()).find("'11'") != std::string::npos);
  }
  try {
    dict({"0", "00", "1"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlappingContexts);
  }
  try {
    dict({"0", "0", "1"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlappingContexts);
  }
}

TEST_CASE("dominates") {
  CsdTrie d = dict({"0", "01", "11"});
  CHECK(dominates(dict({"00", "10", "001", "101", "11"}), d));
  CHECK(dominates(d, d));
  CHECK_FALSE(dominates(dict({"0", "1"}), d));
  CHECK(dominates(d, dict({"0", "1"})));
  CHECK(dominates(d, CsdTrie(2)));
}

TEST_CASE("depth, leaf and node counts") {
  CsdTrie root(2);
  CHECK(root.depth() == 0);
  CHECK(root.leaf_count() == 1);
  CsdTrie g = dict({"0", "1"});
  CHECK(g.depth() == 1);
  CHECK(g.leaf_count() == 2);
  CsdTrie d = dict({"0", "01", "11"});
  CHECK(d.depth() == 2);
  CHECK(d.leaf_count() == 3);
  CHECK(d.node_count() == 5);
}

TEST_CASE("prune_minimal") {
  // Complete depth-3 trie labeled 1 except at 111.
  auto full = LabeledTrie<int>::complete(2, 3, [](const Context& c) { return c == Context{1, 1, 1} ? 0 : 1; });
  auto pruned = full.pruned();
  auto leaves = pruned.leaves();
  REQUIRE(leaves.size() == 4);
  std::vector<std::pair<std::string, int>> got;
  for (const auto& [c, l] : leaves) got.emplace_back(kBin.format(c), l);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::pair<std::string, int>>{{"0", 1}, {"01", 1}, {"011", 1}, {"111", 0}});
  CHECK(pruned.is_minimal());
  CHECK_FALSE(full.is_minimal());
  CHECK(pruned.pruned() == pruned);

  auto constant = LabeledTrie<int>::complete(2, 2, [](const Context&) { return 1; });
  auto p = constant.pruned();
  CHECK(p.is_root_leaf());
  CHECK(p.root_label() == 1);
}

TEST_CASE("graft") {
  auto t = LabeledTrie<int>::from_leaves(2, {{ctx("0"), 0}, {ctx("1"), 1}});
  auto sub = LabeledTrie<int>::from_leaves(2, {{ctx("0"), 5}, {ctx("1"), 6}});
  auto g = t.grafted(ctx("1"), sub);
  auto shape = shape_of(g);
  CHECK(leaf_words(shape) == std::set<std::string>{"0", "01", "11"});
  CHECK(*g.lookup(ctx("01")).label == 5);
  CHECK(*g.lookup(ctx("11")).label == 6);

  LabeledTrie<int> root(2, 3);
  CHECK(root.grafted(Context{}, sub) == sub);

  CHECK_THROWS_AS(g.grafted(ctx("1"), sub), Error);
}

TEST_CASE("prefix_closure fixtures") {
  CHECK(leaf_words(prefix_closure(dict({"0", "01", "11"}))) == std::set<std::string>{"0", "01", "11"});
  CHECK(leaf_words(prefix_closure(dict({"0", "001", "101", "11"}))) ==
        std::set<std::string>{"00", "10", "001", "101", "11"});
  CHECK(prefix_closure(CsdTrie(2)).is_root_leaf());
}

TEST_CASE("runs: counts, lookup and expansion") {
  // ε → spine of four 1s, side children labeled 1, 1111 labeled 0.
  LabeledTrie<int> t(2, 0);
  auto tail = t.make_run(t.root(), 1, 4, 1);
  t.set_label(tail, 0);
  t.validate();
  CHECK(t.depth() == 4);
  CHECK(t.leaf_count() == 5);
  CHECK(t.has_runs());
  CHECK(*t.lookup(ctx("0111")).label == 1);
  CHECK(*t.lookup(ctx("01111")).label == 0);
  CHECK(*t.lookup(ctx("10")).label == 1);
  CHECK_FALSE(t.lookup(ctx("111")).found);

  auto e = t.expanded();
  CHECK_FALSE(e.has_runs());
  CHECK(e.depth() == 4);
  std::vector<std::pair<std::string, int>> got;
  for (const auto& [c, l] : e.leaves()) got.emplace_back(kBin.format(c), l);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::pair<std::string, int>>{{"0", 1}, {"01", 1}, {"011", 1}, {"0111", 1}, {"1111", 0}});
  CHECK(t.leaves() == e.leaves());

  // Astronomically long spines are counted without expansion.
  LabeledTrie<int> big(2, 0);
  auto end = big.make_run(big.root(), 1, std::uint64_t{1} << 40, 1);
  big.set_label(end, 0);
  CHECK(big.depth() == (std::uint64_t{1} << 40));
  CHECK(big.leaf_count() == (std::uint64_t{1} << 40) + 1);
  CHECK_THROWS_AS(big.leaves(), Error);
}

TEST_CASE("runs: pruning merges and collapses") {
  LabeledTrie<int> t(2, 0);
  auto mid = t.make_run(t.root(), 1, 3, 1);
  auto tail = t.make_run(mid, 1, 2, 1);
  t.set_label(tail, 0);
  auto p = t.pruned();
  CHECK(p.stored_nodes() == 2);
  CHECK(p.node(p.root()).run_length == 5);

  LabeledTrie<int> c(2, 0);
  auto end = c.make_run(c.root(), 0, 7, 4);
  c.set_label(end, 4);
  auto q = c.pruned();
  CHECK(q.is_root_leaf());
  CHECK(q.root_label() == 4);
}

TEST_CASE("dump formats") {
  CsdTrie d = dict({"0", "01", "11"});
  std::string text = dump_text(d, kBin);
  CHECK(text.find("  0\n") != std::string::npos);
  CHECK(text.find("    11\n") != std::string::npos);
  std::string dot = dump_dot(d, kBin);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(std::count(dot.begin(), dot.end(), '\n') > 5);
}

TEST_CASE("property: every long history has exactly one suffix leaf") {
  auto why = support::for_all(1000, 11, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    CsdTrie t = support::random_dictionary(rng, arity, 5);
    Context h = support::random_context(rng, arity, t.depth() + 1 + support::below(rng, 3));
    std::size_t matches = 0;
    for (const auto& leaf : t.leaf_contexts()) matches += is_suffix(leaf, h);
    auto hit = t.lookup(h);
    if (matches != 1) return "history has " + std::to_string(matches) + " suffix leaves";
    if (!hit.found) return "lookup failed";
    if (!is_suffix(h.suffix(hit.depth), h)) return "lookup depth inconsistent";
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);
}

TEST_CASE("property: pruning preserves the map and is idempotent") {
  auto why = support::for_all(300, 12, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    CsdTrie shape = support::random_dictionary(rng, arity, 5);
    auto t = shape.transform([&](const NoLabel&) { return static_cast<int>(support::below(rng, 2)); });
    auto p = t.pruned();
    if (!p.is_minimal()) return "pruned trie not minimal";
    if (!(p.pruned() == p)) return "pruning not idempotent";
    if (!dominates(shape_of(t), shape_of(p))) return "pruned dictionary not coarser";
    for (int i = 0; i < 20; ++i) {
      Context h = support::random_context(rng, arity, t.depth() + support::below(rng, 3));
      if (*t.lookup(h).label != *p.lookup(h).label) return "map changed by pruning";
    }
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);
}

TEST_CASE("property: prefix closure") {
  auto why = support::for_all(300, 13, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    CsdTrie d = support::random_dictionary(rng, arity, 5);
    CsdTrie c = prefix_closure(d);
    auto d_leaves = d.leaf_contexts();
    auto c_leaves = c.leaf_contexts();
    std::set<Context> got(c_leaves.begin(), c_leaves.end());
    if (got != closure_by_enumeration(d_leaves)) return "closure differs from the maximal prefixes";
    if (!dominates(c, d)) return "closure does not dominate its input";
    if (c_leaves.size() > d_leaves.size() * d.depth()) return "closure larger than |D| d(D)";
    auto has_suffix_leaf = [&](const Context& p) {
      return std::any_of(c_leaves.begin(), c_leaves.end(), [&](const Context& h) { return is_suffix(p, h); });
    };
    for (const auto& s : c_leaves)
      for (std::size_t k = 1; k <= s.size(); ++k)
        if (!has_suffix_leaf(s.prefix(k))) return "closure not prefix-closed at " + support::words({s}, Alphabet::of_size(arity));
    for (const auto& s : d_leaves)
      for (std::size_t k = 1; k <= s.size(); ++k)
        if (!has_suffix_leaf(s.prefix(k))) return "prefix of an input word not covered";
    for (const auto& h : c_leaves)
      for (std::size_t a = 0; a < arity; ++a)
        if (!c.lookup(h.then(static_cast<Symbol>(a))).found) return "closure lemma fails";
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);
}
