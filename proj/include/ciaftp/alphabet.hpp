#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ciaftp {

/// Index of a symbol in its alphabet; the index order is the alphabet order.
using Symbol = std::uint8_t;

/// A finite word of past symbols, stored oldest-to-newest: `back()` is the
/// most recent symbol. The empty context is the root of every trie.
class Context {
 public:
  Context() = default;
  explicit Context(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}
  Context(std::initializer_list<Symbol> symbols) : symbols_(symbols) {}

  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }

  /// Oldest-first indexing.
  Symbol operator[](std::size_t i) const { return symbols_[i]; }
  /// `recent(0)` is the most recent symbol, `recent(1)` the one before, ...
  Symbol recent(std::size_t i) const { return symbols_[symbols_.size() - 1 - i]; }

  /// The last `k` symbols.
  Context suffix(std::size_t k) const;
  /// The first `k` symbols (the oldest part).
  Context prefix(std::size_t k) const;
  /// This context followed by `g` as the new most-recent symbol.
  Context then(Symbol g) const;
  /// `g` prepended as a new oldest symbol.
  Context preceded_by(Symbol g) const;

  std::span<const Symbol> symbols() const noexcept { return symbols_; }
  const std::vector<Symbol>& vec() const noexcept { return symbols_; }

  friend bool operator==(const Context&, const Context&) = default;
  friend auto operator<=>(const Context&, const Context&) = default;

 private:
  std::vector<Symbol> symbols_;
};

/// True iff the last |s| symbols of h equal s (h ⪰ s). The empty context is
/// a suffix of everything.
bool is_suffix(const Context& s, const Context& h);

/// An ordered set of named symbols. The order is fixed for the lifetime of
/// the alphabet and determines the coupling layout.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  static Alphabet binary() { return Alphabet({"0", "1"}); }
  static Alphabet of_size(std::size_t n);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(Symbol g) const { return names_.at(g); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<Symbol> index_of(std::string_view name) const;

  /// Oldest-to-newest text: names joined without separator when every name
  /// is a single character, comma-joined otherwise.
  std::string format(const Context& c) const;
  std::string format(std::span<const Symbol> word) const;
  /// Inverse of `format`. Throws Error(UnknownSymbol).
  Context parse(std::string_view text) const;

  bool single_char() const noexcept { return single_char_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  bool single_char_ = true;
};

}  // namespace ciaftp
