#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace compdoc {

/// Integer exponents over the base dimensions. All-zero means dimensionless.
struct Dimension {
  enum Base { length, mass, time, charge, amount, count };
  static constexpr std::array<std::string_view, count> kNames = {"length", "mass", "time",
                                                                 "charge", "amount"};

  std::array<int, count> exponents{};

  static Dimension of(Base base, int exponent = 1) {
    Dimension d;
    d.exponents[base] = exponent;
    return d;
  }

  bool dimensionless() const noexcept {
    for (int e : exponents) {
      if (e != 0) return false;
    }
    return true;
  }

  Dimension operator*(const Dimension& other) const noexcept {
    Dimension d;
    for (int i = 0; i < count; ++i) d.exponents[i] = exponents[i] + other.exponents[i];
    return d;
  }

  Dimension operator/(const Dimension& other) const noexcept {
    Dimension d;
    for (int i = 0; i < count; ++i) d.exponents[i] = exponents[i] - other.exponents[i];
    return d;
  }

  Dimension pow(int n) const noexcept {
    Dimension d;
    for (int i = 0; i < count; ++i) d.exponents[i] = exponents[i] * n;
    return d;
  }

  /// nth root; empty when some exponent is not divisible by n.
  std::optional<Dimension> root(int n) const noexcept;

  friend bool operator==(const Dimension&, const Dimension&) = default;

  /// e.g. "length^2 mass time^-2", or "dimensionless".
  std::string to_string() const;
  /// Inverse of to_string; also accepts "1" and the empty string.
  static Dimension parse(std::string_view text);
};

/// Product of named unit factors with integer exponents, kept in canonical
/// order so equal units compare equal. Says nothing about scale; scale and
/// dimension come from a dictionary.
class Unit {
 public:
  using Factor = std::pair<std::string, int>;

  Unit() = default;
  explicit Unit(std::string_view single) { factors_.emplace_back(std::string(single), 1); }

  /// Grammar: factor (('.' | '*' | ' ' | '/') factor)*, factor = name ('^' int)?.
  /// A factor following '/' has its exponent negated. A leading `units:`
  /// prefix on any factor is dropped. "" and "1" denote the empty unit.
  static Unit parse(std::string_view text);

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  bool empty() const noexcept { return factors_.empty(); }

  Unit operator*(const Unit& other) const;
  Unit operator/(const Unit& other) const;
  Unit pow(int n) const;
  std::optional<Unit> root(int n) const;

  friend bool operator==(const Unit&, const Unit&) = default;

  std::string to_string() const;

 private:
  void normalize();
  std::vector<Factor> factors_;
};

/// A dimensioned number.
struct Scalar {
  double value = 0.0;
  Dimension dimension;
  Unit unit;

  friend bool operator==(const Scalar&, const Scalar&) = default;
};

}  // namespace compdoc
