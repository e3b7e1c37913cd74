#include <doctest.h>

#include "ciaftp/engine.hpp"
#include "support.hpp"

using namespace ciaftp;
using support::Rng;

namespace {

/// Replays the draws of a run forward from arbitrary pasts; every past must
/// end in the sampled window.
std::string forward_check(const Kernel& k, std::size_t window, std::uint64_t seed, const RunResult& r, Rng& rng,
                          std::size_t past_len) {
  const std::size_t n = static_cast<std::size_t>(-r.diagnostics.tau);
  RngStream replay(seed);
  std::vector<double> draws(n);
  for (auto& u : draws) u = replay.next_uniform();
  // The first draw belongs to t = -1, the last to t = tau.
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<Symbol> h = support::random_context(rng, k.alphabet().size(), past_len).vec();
    for (std::size_t i = n; i-- > 0;) {
      auto g = phi(k, draws[i], Context(h));
      if (!g) return "history too short to decide the update rule";
      h.push_back(*g);
    }
    Window tail(h.end() - static_cast<std::ptrdiff_t>(window), h.end());
    if (tail != r.sample) return "a forward replay misses the sample";
  }
  return {};
}

}  // namespace

TEST_CASE("init builds the identity map") {
  auto s = init(Alphabet::binary(), 2);
  CHECK(s.t == 0);
  CHECK(s.map.leaf_count() == 4);
  CHECK(s.map.depth() == 2);
  for (const auto& [c, w] : s.map.leaves()) CHECK(w == c.vec());
  CHECK_FALSE(s.coalesced());
  CHECK_THROWS_AS(init(Alphabet::binary(), 0), Error);
  auto t = init(Alphabet::of_size(3), 3);
  CHECK(t.map.leaf_count() == 27);
}

TEST_CASE("RngStream") {
  RngStream a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    double x = a.next_uniform();
    CHECK(x == b.next_uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs |= x != c.next_uniform();
  }
  CHECK(differs);
  CHECK(a.counter() == 1000);
  CHECK(a.seed() == 7);
}

TEST_CASE("memoryless kernels coalesce after L steps") {
  auto m = support::memoryless(0.75);
  for (std::size_t L = 1; L <= 6; ++L)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto r = run(m, L, seed);
      CHECK(r.diagnostics.tau == -static_cast<std::int64_t>(L));
      CHECK(r.sample.size() == L);
      CHECK(r.diagnostics.regeneration_times.size() == L);
    }
}

TEST_CASE("run diagnostics") {
  auto desk = support::desk_kernel();
  auto r = run(desk, 3, 11);
  const auto& d = r.diagnostics;
  CHECK(d.tau < 0);
  CHECK(d.iterations == static_cast<std::uint64_t>(-d.tau));
  REQUIRE(d.records.size() == d.iterations);
  std::uint64_t touches = 0;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    CHECK(d.records[i].t == -static_cast<std::int64_t>(i) - 1);
    touches += d.records[i].node_touches;
  }
  CHECK(touches == d.total_node_touches);
  CHECK(d.records.back().leaves == 1);
  CHECK(d.seed == 11);
  CHECK(d.generator == "mt19937_64");
  auto quiet = run(desk, 3, 11, {}, RunOptions{false, false});
  CHECK(quiet.diagnostics.records.empty());
  CHECK(quiet.sample == r.sample);
}

TEST_CASE("runs are deterministic") {
  RenewalSqrtKernel k;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = run(k, 2, seed);
    auto b = run(k, 2, seed);
    CHECK(a.sample == b.sample);
    CHECK(a.diagnostics.tau == b.diagnostics.tau);
    CHECK(a.diagnostics.total_node_touches == b.diagnostics.total_node_touches);
    CHECK(a.diagnostics.regeneration_times == b.diagnostics.regeneration_times);
  }
}

TEST_CASE("budget limits abort with partial diagnostics") {
  RenewalSqrtKernel k;
  try {
    run(k, 1, 3, Limits{1, kDefaultMaxDepth, 10'000'000});
    FAIL("expected an abort");
  } catch (const RunAborted& e) {
    CHECK(e.code() == ErrorCode::IterationLimitExceeded);
    CHECK(e.diagnostics().iterations == 1);
    CHECK(e.diagnostics().records.size() == 1);
    CHECK(e.diagnostics().tau == -1);
  }

  auto desk = support::desk_kernel();
  bool depth_hit = false;
  for (std::uint64_t seed = 0; seed < 50 && !depth_hit; ++seed) {
    try {
      run(desk, 3, seed, Limits{1'000'000, 1, 10'000'000});
    } catch (const RunAborted& e) {
      CHECK(e.code() == ErrorCode::MaxDepthExceeded);
      depth_hit = true;
    }
  }
  CHECK(depth_hit);

  try {
    run(desk, 4, 1, Limits{1'000'000, kDefaultMaxDepth, 3});
    FAIL("expected an abort");
  } catch (const RunAborted& e) {
    CHECK(e.code() == ErrorCode::NodeBudgetExceeded);
  }
  try {
    pw_extended(desk, 4, 1, Limits{1'000'000, kDefaultMaxDepth, 3});
    FAIL("expected an abort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NodeBudgetExceeded);
  }
}

TEST_CASE("the extended-chain baseline needs finite order") {
  RenewalSqrtKernel k;
  CHECK_THROWS_AS(pw_extended(k, 2, 1), Error);
}

TEST_CASE("examples: renewal and desk samples replay forward") {
  Rng rng(41);
  RenewalSqrtKernel k;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto r = run(k, 3, seed);
    CHECK(r.diagnostics.tau <= -3);
    // The renewal kernel has infinite memory; a long all-ones past still
    // decides every draw the run used once it contains a zero.
    std::string why;
    RngStream replay(seed);
    std::vector<double> draws(static_cast<std::size_t>(-r.diagnostics.tau));
    for (auto& u : draws) u = replay.next_uniform();
    for (int trial = 0; trial < 4 && why.empty(); ++trial) {
      std::vector<Symbol> h = support::random_context(rng, 2, 4).vec();
      h.insert(h.begin(), 0);
      for (std::size_t i = draws.size(); i-- > 0;) {
        auto g = phi(k, draws[i], Context(h));
        if (!g) {
          why = "undecided";
          break;
        }
        h.push_back(*g);
      }
      if (why.empty() && Window(h.end() - 3, h.end()) != r.sample) why = "mismatch";
    }
    CHECK_MESSAGE(why.empty(), why);
  }
  auto desk = support::desk_kernel();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto r = run(desk, 3, seed);
    auto why = forward_check(desk, 3, seed, r, rng, 2);
    CHECK_MESSAGE(why.empty(), why);
  }
}

TEST_CASE("property: samples agree with forward replays") {
  auto why = support::for_all(300, 51, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    const std::size_t depth = 1 + support::below(rng, 4);
    auto k = support::random_vlmc(rng, arity, depth);
    const std::size_t L = 1 + support::below(rng, 4);
    const std::uint64_t seed = rng();
    auto r = run(k, L, seed);
    return forward_check(k, L, seed, r, rng, k.tree().depth());
  });
  CHECK_MESSAGE(why.empty(), why);
}

TEST_CASE("property: fused composition equals grafting") {
  auto why = support::for_all(300, 52, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    auto k = support::random_vlmc(rng, arity, 1 + support::below(rng, 4), 0.1);
    const std::size_t L = 1 + support::below(rng, 3);
    EngineState state = init(k.alphabet(), L);
    const std::size_t steps = support::below(rng, 6);
    for (std::size_t i = 0; i <= steps && !state.coalesced(); ++i) {
      auto slice = build_slice(k, support::uniform(rng));
      auto fused = compose(state.map, slice);
      try {
        fused.validate();
      } catch (const Error& e) {
        return std::string("fused composition is malformed: ") + e.what();
      }
      if (fused.pruned() != compose_by_grafting(state.map, slice).pruned()) return "fused and grafted maps differ";
      state.map = fused.pruned();
      state.t -= 1;
    }
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);

  RenewalSqrtKernel r;
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    EngineState state = init(r.alphabet(), 1 + support::below(rng, 3));
    for (int i = 0; i < 6 && !state.coalesced(); ++i) {
      auto slice = build_slice(r, support::uniform(rng) * 0.95);
      auto fused = compose(state.map, slice);
      REQUIRE(fused.pruned().expanded().pruned() == compose_by_grafting(state.map, slice).pruned());
      state.map = fused.pruned();
    }
  }
}

TEST_CASE("property: the baseline matches the adaptive engine draw for draw") {
  auto why = support::for_all(300, 54, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    auto k = support::random_vlmc(rng, arity, 1 + support::below(rng, 4));
    const std::size_t L = 1 + support::below(rng, 4);
    const std::uint64_t seed = rng();
    auto a = run(k, L, seed);
    auto b = pw_extended(k, L, seed);
    if (a.sample != b.sample) return "samples differ";
    if (a.diagnostics.tau != b.diagnostics.tau) return "coalescence times differ";
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);
}

TEST_CASE("property: invariants hold along runs") {
  auto why = support::for_all(200, 55, [](Rng& rng) -> std::string {
    const std::size_t arity = 2 + support::below(rng, 2);
    auto k = support::random_vlmc(rng, arity, 1 + support::below(rng, 4));
    const std::size_t L = 1 + support::below(rng, 4);
    try {
      run(k, L, rng(), {}, RunOptions{true, false});
    } catch (const Error& e) {
      return e.what();
    }
    return {};
  });
  CHECK_MESSAGE(why.empty(), why);

  RenewalSqrtKernel r;
  auto desk = support::desk_kernel();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CHECK_NOTHROW(run(r, 1 + seed % 3, seed, {}, RunOptions{true, false}));
    CHECK_NOTHROW(run(desk, 1 + seed % 4, seed, {}, RunOptions{true, false}));
  }
}
