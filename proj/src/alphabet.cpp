#include "ciaftp/alphabet.hpp"

#include <algorithm>
#include <set>

#include "ciaftp/error.hpp"

namespace ciaftp {

Context Context::suffix(std::size_t k) const {
  k = std::min(k, symbols_.size());
  return Context(std::vector<Symbol>(symbols_.end() - static_cast<std::ptrdiff_t>(k), symbols_.end()));
}

Context Context::prefix(std::size_t k) const {
  k = std::min(k, symbols_.size());
  return Context(std::vector<Symbol>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(k)));
}

Context Context::then(Symbol g) const {
  std::vector<Symbol> out = symbols_;
  out.push_back(g);
  return Context(std::move(out));
}

Context Context::preceded_by(Symbol g) const {
  std::vector<Symbol> out;
  out.reserve(symbols_.size() + 1);
  out.push_back(g);
  out.insert(out.end(), symbols_.begin(), symbols_.end());
  return Context(std::move(out));
}

bool is_suffix(const Context& s, const Context& h) {
  if (s.size() > h.size()) return false;
  return std::equal(s.symbols().begin(), s.symbols().end(), h.symbols().end() - static_cast<std::ptrdiff_t>(s.size()));
}

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error(ErrorCode::InvalidArgument, "alphabet must contain at least one symbol");
  if (names_.size() > 255) throw Error(ErrorCode::InvalidArgument, "alphabet larger than 255 symbols");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorCode::InvalidArgument, "empty symbol name");
    if (n.find(',') != std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "symbol name '" + n + "' contains a comma");
    if (!seen.insert(n).second) throw Error(ErrorCode::InvalidArgument, "duplicate symbol '" + n + "'");
    if (n.size() != 1) single_char_ = false;
  }
}

Alphabet Alphabet::of_size(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
  return Alphabet(std::move(names));
}

std::optional<Symbol> Alphabet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<Symbol>(i);
  return std::nullopt;
}

std::string Alphabet::format(std::span<const Symbol> word) const {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!single_char_ && i > 0) out += ',';
    out += names_.at(word[i]);
  }
  return out;
}

std::string Alphabet::format(const Context& c) const { return format(c.symbols()); }

Context Alphabet::parse(std::string_view text) const {
  std::vector<Symbol> out;
  if (text.empty()) return Context();
  auto push = [&](std::string_view token) {
    auto g = index_of(token);
    if (!g) throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + std::string(token) + "' in context '" + std::string(text) + "'");
    out.push_back(*g);
  };
  if (single_char_) {
    for (char ch : text) push(std::string_view(&ch, 1));
  } else {
    std::size_t start = 0;
    while (true) {
      auto comma = text.find(',', start);
      push(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return Context(std::move(out));
}

}  // namespace ciaftp
