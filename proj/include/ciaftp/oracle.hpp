#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ciaftp/engine.hpp"
#include "ciaftp/kernel.hpp"

namespace ciaftp {

/// The finite-order process lifted to a first-order chain on d-tuples.
/// State indices encode tuples oldest-first, most recent symbol least
/// significant; from state s, symbol g leads to (s·|G| + g) mod |G|^d.
struct ExtendedChain {
  std::size_t arity = 0;
  std::size_t order = 0;
  std::uint64_t states = 0;
  /// prob[s * arity + g] = P(g | tuple s).
  std::vector<double> prob;

  std::uint64_t successor(std::uint64_t s, Symbol g) const { return (s * arity + g) % states; }
};

inline constexpr std::uint64_t kMaxExtendedStates = 1'000'000;

/// Builds the chain at `order` (at least the kernel order, and at least 1).
/// Throws Error(Unsupported) for infinite-memory kernels and
/// Error(EnumerationGuard) beyond 10^6 states.
ExtendedChain build_extended(const Kernel& k, std::size_t order);

enum class StationaryMethod { Auto, Dense, Power };

/// The unique π with πT = π. Dense solve up to 4096 states, power iteration
/// otherwise (or as requested). Throws Error(Reducible) / Error(Periodic).
std::vector<double> stationary(const ExtendedChain& chain, double tol = 1e-12,
                               StationaryMethod method = StationaryMethod::Auto);

/// ‖πT − π‖₁.
double stationarity_residual(const ExtendedChain& chain, const std::vector<double>& pi);

/// Law of the most recent m symbols. Throws Error(InvalidArgument) if m > order.
std::vector<double> window_law(const ExtendedChain& chain, const std::vector<double>& pi, std::size_t m);

double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

/// Index of a window in `window_law` order.
std::uint64_t window_index(const Window& w, std::size_t arity);

enum class Algorithm { Ciaftp, PwExtended };

struct ValidateOptions {
  Limits limits;
  unsigned jobs = 1;
  Algorithm algorithm = Algorithm::Ciaftp;
  bool check_invariants = false;
};

struct ValidationCell {
  Window window;
  double expected = 0.0;
  std::uint64_t count = 0;
};

struct ValidationReport {
  double tv = 0.0;
  double tolerance = 0.0;
  std::uint64_t n_runs = 0;
  std::uint64_t n_failed = 0;
  bool passed = false;
  std::vector<ValidationCell> cells;
  /// First failure message per error code seen, if any.
  std::vector<std::string> errors;
  std::uint64_t total_node_touches = 0;
  double mean_tau = 0.0;
};

/// Tolerance max(0.005, 3·sqrt(|G|^L / N)).
double validation_tolerance(std::size_t arity, std::size_t window, std::uint64_t runs);

/// N engine samples with seeds seed_base + i, compared with the oracle law.
ValidationReport validate(const Kernel& k, std::size_t window, std::uint64_t runs, std::uint64_t seed_base,
                          const ValidateOptions& options = {});

}  // namespace ciaftp
