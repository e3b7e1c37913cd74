#include "ciaftp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ciaftp/error.hpp"

namespace ciaftp {

namespace {

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

double sum_in_order(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s;
}

}  // namespace

Distribution::Distribution(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw Error(ErrorCode::BadProbability, "empty distribution");
  double sum = 0.0;
  for (double x : p_) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "probability " << x << " outside [0, 1]";
      throw Error(ErrorCode::BadProbability, msg.str());
    }
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << sum;
    throw Error(ErrorCode::BadProbability, msg.str());
  }
}

std::string_view family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::ContextTree: return "context_tree";
    case KernelFamily::FullMarkov: return "full_markov";
    case KernelFamily::Memoryless: return "memoryless";
    case KernelFamily::RenewalSqrt: return "renewal_sqrt";
  }
  return "unknown";
}

void Kernel::check_symbols(const Context& s) const {
  for (Symbol g : s.symbols())
    if (g >= alphabet_.size()) throw Error(ErrorCode::UnknownSymbol, "context symbol outside the kernel alphabet");
}

double Kernel::min_mass_by_enumeration(std::size_t k) const {
  const std::size_t n = alphabet_.size();
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < k; ++i) {
    count *= n;
    if (count > kEnumerationGuard)
      throw Error(ErrorCode::EnumerationGuard, "|G|^k exceeds the enumeration guard of 10^7 contexts");
  }
  std::vector<Symbol> word(k, 0);
  double best = 1.0;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    std::uint64_t rest = idx;
    for (std::size_t i = k; i-- > 0;) {
      word[i] = static_cast<Symbol>(rest % n);
      rest /= n;
    }
    best = std::min(best, lower_bounds(Context(word)).mass);
  }
  return best;
}

// ---- context trees -------------------------------------------------------

ContextTreeKernel::ContextTreeKernel(Alphabet alphabet, LabeledTrie<Distribution> tree, KernelFamily family)
    : Kernel(std::move(alphabet)), tree_(std::move(tree)), family_(family) {
  const std::size_t n = this->alphabet().size();
  if (tree_.arity() != n) throw Error(ErrorCode::StructuralError, "context tree arity differs from alphabet size");
  if (tree_.has_runs()) throw Error(ErrorCode::Unsupported, "context tree kernels must be finite");
  tree_.validate();
  node_min_.assign(tree_.stored_nodes(), {});
  // Post-order: per-symbol minimum of the leaf laws below each node.
  std::vector<std::pair<LabeledTrie<Distribution>::NodeId, bool>> stack{{tree_.root(), false}};
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    const auto& node = tree_.node(id);
    if (node.kind == LabeledTrie<Distribution>::Kind::Leaf) {
      if (node.label.size() != n) throw Error(ErrorCode::BadProbability, "leaf law has the wrong number of symbols");
      node_min_[id] = node.label.probs();
    } else if (!done) {
      stack.push_back({id, true});
      for (std::size_t b = 0; b < n; ++b) stack.push_back({node.link + static_cast<LabeledTrie<Distribution>::NodeId>(b), false});
    } else {
      std::vector<double> m = node_min_[node.link];
      for (std::size_t b = 1; b < n; ++b) {
        const auto& c = node_min_[node.link + b];
        for (std::size_t g = 0; g < n; ++g) m[g] = std::min(m[g], c[g]);
      }
      node_min_[id] = std::move(m);
    }
  }
}

ContextTreeKernel ContextTreeKernel::memoryless(Alphabet alphabet, Distribution p) {
  std::size_t n = alphabet.size();
  return ContextTreeKernel(std::move(alphabet), LabeledTrie<Distribution>(n, std::move(p)), KernelFamily::Memoryless);
}

ContextTreeKernel ContextTreeKernel::full_markov(Alphabet alphabet, std::size_t order,
                                                 const std::function<Distribution(const Context&)>& law) {
  std::size_t n = alphabet.size();
  auto tree = LabeledTrie<Distribution>::complete(n, order, law);
  return ContextTreeKernel(std::move(alphabet), std::move(tree), KernelFamily::FullMarkov);
}

LowerBoundRow ContextTreeKernel::lower_bounds(const Context& s) const {
  check_symbols(s);
  using Trie = LabeledTrie<Distribution>;
  Trie::NodeId id = tree_.root();
  for (std::size_t i = 0; i < s.size() && tree_.node(id).kind == Trie::Kind::Branch; ++i) id = tree_.child(id, s.recent(i));
  LowerBoundRow row;
  row.a = node_min_[id];
  row.mass = sum_in_order(row.a);
  row.resolved = tree_.node(id).kind == Trie::Kind::Leaf;
  return row;
}

double ContextTreeKernel::min_mass(std::size_t k) const {
  // Contexts of length k either pass through a leaf (mass 1) or end at a
  // node of depth exactly k.
  using Trie = LabeledTrie<Distribution>;
  double best = 1.0;
  std::vector<std::pair<Trie::NodeId, std::size_t>> stack{{tree_.root(), 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    const auto& node = tree_.node(id);
    if (d == k) {
      if (node.kind != Trie::Kind::Leaf) best = std::min(best, sum_in_order(node_min_[id]));
      continue;
    }
    if (node.kind == Trie::Kind::Branch)
      for (std::size_t b = 0; b < tree_.arity(); ++b) stack.push_back({node.link + static_cast<Trie::NodeId>(b), d + 1});
  }
  return best;
}

double ContextTreeKernel::oscillation(const Context& s) const {
  check_symbols(s);
  using Trie = LabeledTrie<Distribution>;
  Trie::NodeId id = tree_.root();
  for (std::size_t i = 0; i < s.size() && tree_.node(id).kind == Trie::Kind::Branch; ++i) id = tree_.child(id, s.recent(i));
  std::vector<const Distribution*> laws;
  tree_.visit(id, [&](Trie::NodeId n) {
    if (tree_.node(n).kind == Trie::Kind::Leaf) laws.push_back(&tree_.node(n).label);
  });
  double eta = 0.0;
  for (std::size_t i = 0; i < laws.size(); ++i)
    for (std::size_t j = i + 1; j < laws.size(); ++j) eta = std::max(eta, total_variation(laws[i]->probs(), laws[j]->probs()));
  return eta;
}

double oscillation(const Kernel& k, const Context& s) {
  const auto* tree = dynamic_cast<const ContextTreeKernel*>(&k);
  if (!tree) throw Error(ErrorCode::Unsupported, "oscillation is only available for finite context-tree kernels");
  return tree->oscillation(s);
}

// ---- renewal -------------------------------------------------------------

RenewalSqrtKernel::RenewalSqrtKernel() : Kernel(Alphabet::binary()) {}

double RenewalSqrtKernel::zero_given_run(std::uint64_t r) {
  return 1.0 - 1.0 / std::sqrt(static_cast<double>(r + 1));
}

LowerBoundRow RenewalSqrtKernel::lower_bounds(const Context& s) const {
  check_symbols(s);
  std::size_t r = 0;
  while (r < s.size() && s.recent(r) == 1) ++r;
  LowerBoundRow row;
  if (r == s.size()) {
    // Only ones are known: the run may continue arbitrarily far, and for
    // r = 0 the history may end in a 0.
    row.a = {r == 0 ? 0.0 : zero_given_run(r), 0.0};
    row.resolved = false;
  } else if (r == 0) {
    row.a = {0.0, 1.0};
    row.resolved = true;
  } else {
    row.a = {zero_given_run(r), 1.0 / std::sqrt(static_cast<double>(r + 1))};
    row.resolved = true;
  }
  row.mass = sum_in_order(row.a);
  return row;
}

double RenewalSqrtKernel::min_mass(std::size_t k) const { return k == 0 ? 0.0 : zero_given_run(k); }

std::optional<SpineHint> RenewalSqrtKernel::spine(const Context& s, double u) const {
  for (Symbol g : s.symbols())
    if (g != 1) return std::nullopt;
  const std::uint64_t j = s.size();
  auto resolved_at = [u](std::uint64_t k) { return k >= 1 && u < zero_given_run(k); };
  if (resolved_at(j)) return std::nullopt;
  // Smallest k > j with u < 1 − 1/√(k+1): bracket, then bisect on the very
  // same floating-point expression the lower bounds use.
  std::uint64_t lo = j;  // not resolved
  std::uint64_t hi = std::max<std::uint64_t>(j + 1, 2);
  while (!resolved_at(hi)) {
    if (hi >= kMaxSpine) throw Error(ErrorCode::MaxDepthExceeded, "renewal spine longer than 2^62");
    lo = hi;
    hi = std::min<std::uint64_t>(hi * 2, kMaxSpine);
  }
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    (resolved_at(mid) ? hi : lo) = mid;
  }
  return SpineHint{1, hi - j, 1, 0};
}

// ---- depth bound ---------------------------------------------------------

DepthBound expected_depth_bound(const Kernel& k, std::size_t window, std::size_t k_max) {
  DepthBound out;
  out.min_masses.reserve(k_max + 1);
  for (std::size_t j = 0; j <= k_max; ++j) out.min_masses.push_back(k.min_mass(j));
  for (std::size_t start = 1; start <= window; ++start) {
    double prod = 1.0;
    for (std::size_t j = start; j <= k_max; ++j) prod *= out.min_masses[j];
    out.bound += 1.0 - prod;
  }
  double prod = 1.0;
  for (std::size_t m = 0; m <= k_max; ++m) {
    prod *= out.min_masses[m];
    out.criterion_sum += prod;
  }
  out.criterion_diverges = prod >= 1e-9;
  return out;
}

}  // namespace ciaftp
