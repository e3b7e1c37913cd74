#include "ciaftp/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

namespace ciaftp {

ExtendedChain build_extended(const Kernel& k, std::size_t order) {
  const auto kernel_order = k.order();
  if (!kernel_order) throw Error(ErrorCode::Unsupported, "no extended chain for kernels of infinite memory");
  ExtendedChain chain;
  chain.arity = k.alphabet().size();
  chain.order = std::max<std::size_t>({order, *kernel_order, 1});
  chain.states = 1;
  for (std::size_t i = 0; i < chain.order; ++i) {
    chain.states *= chain.arity;
    if (chain.states > kMaxExtendedStates)
      throw Error(ErrorCode::EnumerationGuard, "extended state space exceeds 10^6 states");
  }
  chain.prob.resize(chain.states * chain.arity);
  std::vector<Symbol> word(chain.order);
  for (std::uint64_t s = 0; s < chain.states; ++s) {
    std::uint64_t rest = s;
    for (std::size_t i = chain.order; i-- > 0;) {
      word[i] = static_cast<Symbol>(rest % chain.arity);
      rest /= chain.arity;
    }
    LowerBoundRow row = k.lower_bounds(Context(word));
    if (!row.resolved) throw Error(ErrorCode::StructuralError, "kernel not resolved at its own order");
    std::copy(row.a.begin(), row.a.end(), chain.prob.begin() + static_cast<std::ptrdiff_t>(s * chain.arity));
  }
  return chain;
}

namespace {

void check_mixing(const ExtendedChain& c) {
  const std::uint64_t n = c.states;
  std::vector<std::vector<std::uint64_t>> reverse(n);
  for (std::uint64_t s = 0; s < n; ++s)
    for (std::size_t g = 0; g < c.arity; ++g)
      if (c.prob[s * c.arity + g] > 0.0) reverse[c.successor(s, static_cast<Symbol>(g))].push_back(s);

  std::vector<std::int64_t> level(n, -1);
  std::vector<std::uint64_t> queue{0};
  level[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint64_t s = queue[head];
    for (std::size_t g = 0; g < c.arity; ++g) {
      if (c.prob[s * c.arity + g] <= 0.0) continue;
      const std::uint64_t t = c.successor(s, static_cast<Symbol>(g));
      if (level[t] < 0) {
        level[t] = level[s] + 1;
        queue.push_back(t);
      }
    }
  }
  std::vector<char> back(n, 0);
  std::vector<std::uint64_t> bq{0};
  back[0] = 1;
  for (std::size_t head = 0; head < bq.size(); ++head)
    for (std::uint64_t p : reverse[bq[head]])
      if (!back[p]) {
        back[p] = 1;
        bq.push_back(p);
      }
  if (queue.size() != n || bq.size() != n) throw Error(ErrorCode::Reducible, "extended chain is not irreducible");

  std::int64_t period = 0;
  for (std::uint64_t s = 0; s < n; ++s)
    for (std::size_t g = 0; g < c.arity; ++g)
      if (c.prob[s * c.arity + g] > 0.0)
        period = std::gcd(period, std::abs(level[s] + 1 - level[c.successor(s, static_cast<Symbol>(g))]));
  if (period != 1) throw Error(ErrorCode::Periodic, "extended chain has period " + std::to_string(period));
}

std::vector<double> step_law(const ExtendedChain& c, const std::vector<double>& pi) {
  std::vector<double> out(c.states, 0.0);
  for (std::uint64_t s = 0; s < c.states; ++s) {
    if (pi[s] == 0.0) continue;
    for (std::size_t g = 0; g < c.arity; ++g) out[c.successor(s, static_cast<Symbol>(g))] += pi[s] * c.prob[s * c.arity + g];
  }
  return out;
}

std::vector<double> solve_dense(const ExtendedChain& c) {
  const auto n = static_cast<Eigen::Index>(c.states);
  Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(n, n);
  for (std::uint64_t s = 0; s < c.states; ++s)
    for (std::size_t g = 0; g < c.arity; ++g)
      a(static_cast<Eigen::Index>(c.successor(s, static_cast<Symbol>(g))), static_cast<Eigen::Index>(s)) +=
          c.prob[s * c.arity + g];
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  std::vector<double> pi(x.data(), x.data() + n);
  for (double& p : pi) p = std::max(p, 0.0);
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= total;
  return pi;
}

std::vector<double> solve_power(const ExtendedChain& c, double tol) {
  constexpr std::uint64_t kMaxIterations = 10'000'000;
  std::vector<double> pi(c.states, 1.0 / static_cast<double>(c.states));
  for (std::uint64_t it = 0; it < kMaxIterations; ++it) {
    std::vector<double> next = step_law(c, pi);
    double diff = 0.0;
    for (std::uint64_t s = 0; s < c.states; ++s) diff += std::fabs(next[s] - pi[s]);
    pi = std::move(next);
    if (diff <= tol) {
      const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& p : pi) p /= total;
      return pi;
    }
  }
  throw Error(ErrorCode::IterationLimitExceeded, "power iteration did not converge");
}

}  // namespace

std::vector<double> stationary(const ExtendedChain& chain, double tol, StationaryMethod method) {
  check_mixing(chain);
  constexpr std::uint64_t kDenseLimit = 4096;
  if (method == StationaryMethod::Auto) method = chain.states <= kDenseLimit ? StationaryMethod::Dense : StationaryMethod::Power;
  if (method == StationaryMethod::Dense) {
    if (chain.states > kDenseLimit) throw Error(ErrorCode::Unsupported, "dense solve limited to 4096 states");
    return solve_dense(chain);
  }
  return solve_power(chain, tol);
}

double stationarity_residual(const ExtendedChain& chain, const std::vector<double>& pi) {
  std::vector<double> next = step_law(chain, pi);
  double r = 0.0;
  for (std::uint64_t s = 0; s < chain.states; ++s) r += std::fabs(next[s] - pi[s]);
  return r;
}

std::vector<double> window_law(const ExtendedChain& chain, const std::vector<double>& pi, std::size_t m) {
  if (m > chain.order) throw Error(ErrorCode::InvalidArgument, "window longer than the chain order");
  std::uint64_t size = 1;
  for (std::size_t i = 0; i < m; ++i) size *= chain.arity;
  std::vector<double> law(size, 0.0);
  for (std::uint64_t s = 0; s < chain.states; ++s) law[s % size] += pi[s];
  return law;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "distributions over different supports");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

std::uint64_t window_index(const Window& w, std::size_t arity) {
  std::uint64_t idx = 0;
  for (Symbol g : w) idx = idx * arity + g;
  return idx;
}

double validation_tolerance(std::size_t arity, std::size_t window, std::uint64_t runs) {
  const double support = std::pow(static_cast<double>(arity), static_cast<double>(window));
  return std::max(0.005, 3.0 * std::sqrt(support / static_cast<double>(runs)));
}

ValidationReport validate(const Kernel& k, std::size_t window, std::uint64_t runs, std::uint64_t seed_base,
                          const ValidateOptions& options) {
  if (runs == 0) throw Error(ErrorCode::InvalidArgument, "need at least one run");
  const std::size_t n = k.alphabet().size();
  const ExtendedChain chain = build_extended(k, window);
  const std::vector<double> expected = window_law(chain, stationary(chain), window);

  struct Outcome {
    bool ok = false;
    std::uint64_t index = 0;
    std::int64_t tau = 0;
    std::uint64_t touches = 0;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
  };
  std::vector<Outcome> outcomes(runs);
  const unsigned jobs = std::max(1u, options.jobs);
  auto worker = [&](unsigned j) {
    RunOptions ro{options.check_invariants, false};
    for (std::uint64_t i = j; i < runs; i += jobs) {
      Outcome& o = outcomes[i];
      try {
        RunResult r = options.algorithm == Algorithm::Ciaftp ? run(k, window, seed_base + i, options.limits, ro)
                                                             : pw_extended(k, window, seed_base + i, options.limits, ro);
        o.ok = true;
        o.index = window_index(r.sample, n);
        o.tau = r.diagnostics.tau;
        o.touches = r.diagnostics.total_node_touches;
      } catch (const Error& e) {
        o.code = e.code();
        o.message = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
    for (auto& th : pool) th.join();
  }

  ValidationReport rep;
  rep.n_runs = runs;
  std::vector<std::uint64_t> counts(expected.size(), 0);
  std::map<ErrorCode, std::string> first_error;
  double tau_sum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.n_failed;
      first_error.emplace(o.code, std::string(code_name(o.code)) + ": " + o.message);
      continue;
    }
    ++counts[o.index];
    tau_sum += static_cast<double>(o.tau);
    rep.total_node_touches += o.touches;
  }
  const std::uint64_t ok = runs - rep.n_failed;
  std::vector<double> observed(expected.size(), 0.0);
  if (ok > 0)
    for (std::size_t i = 0; i < counts.size(); ++i) observed[i] = static_cast<double>(counts[i]) / static_cast<double>(ok);
  rep.tv = ok > 0 ? tv_distance(observed, expected) : 1.0;
  rep.mean_tau = ok > 0 ? tau_sum / static_cast<double>(ok) : 0.0;
  rep.tolerance = validation_tolerance(n, window, runs);
  rep.passed = rep.n_failed == 0 && rep.tv <= rep.tolerance;
  for (std::uint64_t i = 0; i < expected.size(); ++i) {
    ValidationCell cell;
    cell.window.resize(window);
    std::uint64_t rest = i;
    for (std::size_t p = window; p-- > 0;) {
      cell.window[p] = static_cast<Symbol>(rest % n);
      rest /= n;
    }
    cell.expected = expected[i];
    cell.count = counts[i];
    rep.cells.push_back(std::move(cell));
  }
  for (auto& [code, msg] : first_error) rep.errors.push_back(msg);
  return rep;
}

}  // namespace ciaftp
