#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compdoc/mathml.hpp"
#include "compdoc/quantity.hpp"
#include "compdoc/xml.hpp"

namespace compdoc {

/// One term of a standoff dictionary. In a unit dictionary (prefix "units")
/// each entry is a unit whose `unit` field names the canonical unit it
/// converts to; elsewhere `unit` is the canonical unit of a quantity.
struct DictionaryEntry {
  std::string term;
  std::string description;
  Dimension dimension;
  Unit unit;
  /// Affine in the identifier `value`; maps a value in `term` to `unit`.
  std::optional<mathml::Expr> conversion;
  double scale = 1.0;
  double offset = 0.0;
};

class Dictionary {
 public:
  explicit Dictionary(std::string prefix, std::string title = {});

  /// `<sem:dictionary prefix=...>` holding `<sem:entry term dimension unit>`
  /// children with optional `<sem:description>` and `<sem:conversion>`.
  static Dictionary from_element(const xml::Element& element);
  static Dictionary parse(std::string_view xml_text);

  /// Validates and stores an entry. Conversions are checked to be affine and
  /// must be the identity when the entry is its own canonical unit.
  void add(DictionaryEntry entry);

  const std::string& prefix() const noexcept { return prefix_; }
  const std::string& title() const noexcept { return title_; }
  const DictionaryEntry* find(std::string_view term) const;
  const std::map<std::string, DictionaryEntry, std::less<>>& entries() const noexcept { return entries_; }

 private:
  std::string prefix_;
  std::string title_;
  std::map<std::string, DictionaryEntry, std::less<>> entries_;
};

/// Resolution of a (possibly compound) unit to its canonical form.
struct ResolvedUnit {
  Dimension dimension;
  Unit canonical;
  double scale = 1.0;
  double offset = 0.0;
};

class DictionarySet {
 public:
  DictionarySet() = default;

  /// The unit dictionary and the `ff:` vocabulary shipped with the library.
  static const DictionarySet& builtin();

  void add(std::shared_ptr<const Dictionary> dictionary);
  const std::vector<std::shared_ptr<const Dictionary>>& dictionaries() const noexcept { return dicts_; }

  /// Looks up `prefix:term`; later dictionaries shadow earlier ones.
  const DictionaryEntry* find_term(std::string_view dict_ref) const;
  const DictionaryEntry* find_unit(std::string_view name) const;

  /// Follows each factor's conversion chain to its canonical unit.
  ResolvedUnit resolve(const Unit& unit) const;
  /// A scalar expressed in the canonical form of `unit`.
  Scalar canonical(double value, const Unit& unit) const;

 private:
  std::vector<std::shared_ptr<const Dictionary>> dicts_;
};

/// Converts `v` into `target_unit`. Errors: unknown unit, dimension mismatch
/// (including units of equal dimension with no common canonical unit).
Scalar convert(const Scalar& v, std::string_view target_unit, const DictionarySet& dicts);

}  // namespace compdoc
