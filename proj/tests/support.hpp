#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ciaftp/alphabet.hpp"
#include "ciaftp/kernel.hpp"
#include "ciaftp/trie.hpp"

namespace support {

using namespace ciaftp;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

inline Context random_context(Rng& rng, std::size_t arity, std::size_t length) {
  std::vector<Symbol> w(length);
  for (auto& g : w) g = static_cast<Symbol>(below(rng, arity));
  return Context(std::move(w));
}

/// Random complete dictionary: each node splits with probability `split`
/// until `max_depth`.
inline CsdTrie random_dictionary(Rng& rng, std::size_t arity, std::size_t max_depth, double split = 0.6) {
  CsdTrie t(arity);
  std::vector<std::pair<CsdTrie::NodeId, std::size_t>> stack{{t.root(), 0}};
  bool first = true;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    if (d >= max_depth || (!first && uniform(rng) >= split)) continue;
    first = false;
    auto c = t.expand(id);
    for (std::size_t b = 0; b < arity; ++b) stack.push_back({c + static_cast<CsdTrie::NodeId>(b), d + 1});
  }
  return t;
}

inline Distribution random_distribution(Rng& rng, std::size_t arity, double zero_chance = 0.0) {
  std::vector<double> p(arity);
  double s = 0.0;
  for (auto& x : p) {
    x = uniform(rng) < zero_chance ? 0.0 : uniform(rng) + 0.01;
    s += x;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    s = 1.0;
  }
  double partial = 0.0;
  for (std::size_t g = 0; g + 1 < arity; ++g) {
    p[g] /= s;
    partial += p[g];
  }
  p[arity - 1] = std::max(0.0, 1.0 - partial);
  return Distribution(std::move(p));
}

inline ContextTreeKernel random_vlmc(Rng& rng, std::size_t arity, std::size_t max_depth, double zero_chance = 0.0) {
  CsdTrie shape = random_dictionary(rng, arity, max_depth);
  auto tree = shape.transform([&](const NoLabel&) { return random_distribution(rng, arity, zero_chance); });
  return ContextTreeKernel(Alphabet::of_size(arity), std::move(tree));
}

/// Dictionary {0, 01, 11} with P(1 | ·) = 0.3, 0.6, 0.9.
inline ContextTreeKernel desk_kernel() {
  std::vector<std::pair<Context, Distribution>> leaves{
      {Context{0}, Distribution({0.7, 0.3})},
      {Context{0, 1}, Distribution({0.4, 0.6})},
      {Context{1, 1}, Distribution({0.1, 0.9})},
  };
  return ContextTreeKernel(Alphabet::binary(), LabeledTrie<Distribution>::from_leaves(2, leaves));
}

/// Two-state chain with P(1|0) = alpha, P(0|1) = beta.
inline ContextTreeKernel two_state(double alpha, double beta) {
  return ContextTreeKernel::full_markov(Alphabet::binary(), 1, [&](const Context& c) {
    return c.recent(0) == 0 ? Distribution({1.0 - alpha, alpha}) : Distribution({beta, 1.0 - beta});
  });
}

inline ContextTreeKernel memoryless(double p1) {
  return ContextTreeKernel::memoryless(Alphabet::binary(), Distribution({1.0 - p1, p1}));
}

inline std::string words(const std::vector<Context>& cs, const Alphabet& a) {
  std::string s = "{";
  for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? "," : "") + a.format(cs[i]);
  return s + "}";
}

/// Runs `cases` random trials of a property; every trial gets its own
/// generator seeded from (seed, index) so a failure can be replayed alone.
/// Returns the first failure message, or an empty string.
inline std::string for_all(std::size_t cases, std::uint64_t seed, const std::function<std::string(Rng&)>& trial) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(seed * 1'000'003ULL + i);
    std::string why = trial(rng);
    if (!why.empty()) {
      std::ostringstream msg;
      msg << "case " << i << " (seed " << seed << "): " << why;
      return msg.str();
    }
  }
  return {};
}

}  // namespace support
