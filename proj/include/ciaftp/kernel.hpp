#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ciaftp/alphabet.hpp"
#include "ciaftp/trie.hpp"

namespace ciaftp {

/// Probability vector over an alphabet. Entries are non-negative and sum to
/// one within 1e-12; invalid vectors are rejected, never renormalized.
class Distribution {
 public:
  static constexpr double kTolerance = 1e-12;

  Distribution() = default;
  explicit Distribution(std::vector<double> p);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t g) const { return p_[g]; }
  const std::vector<double>& probs() const noexcept { return p_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> p_;
};

/// The coupling coefficients of one context s: a(g|s) is the infimum of
/// P(g|w) over histories w ending in s, and mass = Σ_g a(g|s).
struct LowerBoundRow {
  std::vector<double> a;
  double mass = 0.0;
  /// The kernel is constant on every history ending in s, so a(·|s) is the
  /// conditional law itself.
  bool resolved = false;
};

/// Closed-form description of a slice spine, for kernels whose slices can be
/// arbitrarily deep. Starting at an unresolved context s: the contexts
/// symbol^i·s for i < length are unresolved, every other child b·symbol^i·s
/// resolves to `side`, and symbol^length·s resolves to `terminal`.
struct SpineHint {
  Symbol symbol = 0;
  std::uint64_t length = 0;
  Symbol side = 0;
  Symbol terminal = 0;
};

enum class KernelFamily { ContextTree, FullMarkov, Memoryless, RenewalSqrt };

std::string_view family_name(KernelFamily f);

/// A transition kernel, seen through the only capability the sampler needs:
/// the per-context lower bounds a_k(g|s).
class Kernel {
 public:
  static constexpr std::uint64_t kEnumerationGuard = 10'000'000;

  explicit Kernel(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}
  virtual ~Kernel() = default;

  const Alphabet& alphabet() const noexcept { return alphabet_; }

  virtual KernelFamily family() const = 0;

  /// Exact infima for context s. Throws Error(UnknownSymbol) on foreign symbols.
  virtual LowerBoundRow lower_bounds(const Context& s) const = 0;

  /// Memory depth when the kernel is a finite context tree.
  virtual std::optional<std::size_t> order() const = 0;

  /// A_k^- = min over contexts of length k of A_k(s).
  virtual double min_mass(std::size_t k) const { return min_mass_by_enumeration(k); }

  /// Brute-force A_k^- over all |G|^k contexts; guarded at 10^7 contexts.
  double min_mass_by_enumeration(std::size_t k) const;

  /// Optional closed-form spine for the slice of draw u at unresolved s.
  virtual std::optional<SpineHint> spine(const Context& /*s*/, double /*u*/) const { return std::nullopt; }

 protected:
  void check_symbols(const Context& s) const;

 private:
  Alphabet alphabet_;
};

/// Variable-length Markov chain: a labeled trie with a conditional law per
/// leaf. Also backs the memoryless and full order-d families.
class ContextTreeKernel final : public Kernel {
 public:
  ContextTreeKernel(Alphabet alphabet, LabeledTrie<Distribution> tree, KernelFamily family = KernelFamily::ContextTree);

  static ContextTreeKernel memoryless(Alphabet alphabet, Distribution p);
  static ContextTreeKernel full_markov(Alphabet alphabet, std::size_t order,
                                       const std::function<Distribution(const Context&)>& law);

  KernelFamily family() const override { return family_; }
  LowerBoundRow lower_bounds(const Context& s) const override;
  std::optional<std::size_t> order() const override { return static_cast<std::size_t>(tree_.depth()); }
  double min_mass(std::size_t k) const override;

  const LabeledTrie<Distribution>& tree() const noexcept { return tree_; }

  /// η_P(s): largest total-variation distance between the laws of two
  /// leaves below s (0 when s already resolves the kernel).
  double oscillation(const Context& s) const;

 private:
  LabeledTrie<Distribution> tree_;
  KernelFamily family_;
  std::vector<std::vector<double>> node_min_;
};

/// Binary renewal kernel driven by r, the number of trailing 1s of the
/// history: P(1 | r = 0) = 1 and P(0 | r) = 1 − 1/√(r+1) for r ≥ 1. Its memory
/// is unbounded and A_0 = 0, so it never regenerates.
class RenewalSqrtKernel final : public Kernel {
 public:
  RenewalSqrtKernel();

  KernelFamily family() const override { return KernelFamily::RenewalSqrt; }
  LowerBoundRow lower_bounds(const Context& s) const override;
  std::optional<std::size_t> order() const override { return std::nullopt; }
  double min_mass(std::size_t k) const override;
  std::optional<SpineHint> spine(const Context& s, double u) const override;

  /// P(0 | r trailing ones), r ≥ 1; also a(0 | 1^r).
  static double zero_given_run(std::uint64_t r);

  /// Longest run length a hint may describe.
  static constexpr std::uint64_t kMaxSpine = std::uint64_t{1} << 62;
};

/// Oscillation of a context-tree kernel; Error(Unsupported) for others.
double oscillation(const Kernel& k, const Context& s);

struct DepthBound {
  /// Σ_{k=1}^{L} (1 − Π_{j=k}^{k_max} A_j^-): the tail of the product beyond
  /// k_max is taken as 1, so this under-estimates the true bound.
  double bound = 0.0;
  /// Σ_{m=0}^{k_max} Π_{k=0}^{m} A_k^-, the regeneration criterion sum.
  double criterion_sum = 0.0;
  /// The criterion terms stay bounded away from zero up to k_max.
  bool criterion_diverges = false;
  std::vector<double> min_masses;
};

DepthBound expected_depth_bound(const Kernel& k, std::size_t window, std::size_t k_max);

}  // namespace ciaftp
