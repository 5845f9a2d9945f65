#include "compdoc/quantity.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "compdoc/error.hpp"

namespace compdoc {

namespace {

int parse_exponent(std::string_view text, std::string_view context) {
  int value = 0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    fail(Errc::unknown_unit, "bad exponent '" + std::string(text) + "' in '" + std::string(context) + "'");
  }
  return value;
}

std::string with_exponent(std::string_view name, int e) {
  std::string out(name);
  if (e != 1) out += "^" + std::to_string(e);
  return out;
}

}  // namespace

std::optional<Dimension> Dimension::root(int n) const noexcept {
  Dimension d;
  for (int i = 0; i < count; ++i) {
    if (exponents[i] % n != 0) return std::nullopt;
    d.exponents[i] = exponents[i] / n;
  }
  return d;
}

std::string Dimension::to_string() const {
  if (dimensionless()) return "dimensionless";
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (exponents[i] == 0) continue;
    if (!out.empty()) out += ' ';
    out += with_exponent(kNames[i], exponents[i]);
  }
  return out;
}

Dimension Dimension::parse(std::string_view text) {
  Dimension d;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '.' || text[pos] == '*')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '.' && text[end] != '*') ++end;
    std::string_view token = text.substr(pos, end - pos);
    pos = end;
    int e = 1;
    if (const auto caret = token.find('^'); caret != std::string_view::npos) {
      e = parse_exponent(token.substr(caret + 1), text);
      token = token.substr(0, caret);
    }
    if (token == "dimensionless" || token == "1") continue;
    const auto it = std::find(kNames.begin(), kNames.end(), token);
    if (it == kNames.end()) {
      fail(Errc::unknown_unit, "unknown base dimension '" + std::string(token) + "'");
    }
    d.exponents[static_cast<std::size_t>(it - kNames.begin())] += e;
  }
  return d;
}

Unit Unit::parse(std::string_view text) {
  Unit u;
  std::size_t pos = 0;
  bool divide_next = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == ' ' || c == '.' || c == '*') {
      ++pos;
      continue;
    }
    if (c == '/') {
      divide_next = true;
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '.' && text[end] != '*' && text[end] != '/') {
      ++end;
    }
    std::string_view token = text.substr(pos, end - pos);
    pos = end;
    int e = 1;
    if (const auto caret = token.find('^'); caret != std::string_view::npos) {
      e = parse_exponent(token.substr(caret + 1), text);
      token = token.substr(0, caret);
    }
    if (token.rfind("units:", 0) == 0) token.remove_prefix(6);
    if (token.empty()) fail(Errc::unknown_unit, "empty unit factor in '" + std::string(text) + "'");
    if (divide_next) e = -e;
    divide_next = false;
    if (token == "1") continue;
    u.factors_.emplace_back(std::string(token), e);
  }
  if (divide_next) fail(Errc::unknown_unit, "dangling '/' in unit '" + std::string(text) + "'");
  u.normalize();
  return u;
}

void Unit::normalize() {
  std::map<std::string, int> merged;
  for (auto& [name, e] : factors_) merged[name] += e;
  factors_.clear();
  for (auto& [name, e] : merged) {
    if (e != 0) factors_.emplace_back(name, e);
  }
  std::stable_sort(factors_.begin(), factors_.end(), [](const Factor& a, const Factor& b) {
    return (a.second > 0) > (b.second > 0);
  });
}

Unit Unit::operator*(const Unit& other) const {
  Unit u = *this;
  u.factors_.insert(u.factors_.end(), other.factors_.begin(), other.factors_.end());
  u.normalize();
  return u;
}

Unit Unit::operator/(const Unit& other) const { return *this * other.pow(-1); }

Unit Unit::pow(int n) const {
  Unit u = *this;
  for (auto& f : u.factors_) f.second *= n;
  u.normalize();
  return u;
}

std::optional<Unit> Unit::root(int n) const {
  Unit u = *this;
  for (auto& f : u.factors_) {
    if (f.second % n != 0) return std::nullopt;
    f.second /= n;
  }
  return u;
}

std::string Unit::to_string() const {
  std::string out;
  for (const auto& [name, e] : factors_) {
    if (!out.empty()) out += '.';
    out += with_exponent(name, e);
  }
  return out;
}

}  // namespace compdoc
