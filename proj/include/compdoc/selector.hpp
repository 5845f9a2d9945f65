#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compdoc/xml.hpp"

namespace compdoc {

using NamespaceMap = std::map<std::string, std::string, std::less<>>;

/// `cml`, `m` (MathML) and `sem` (DeXML).
NamespaceMap default_namespaces();

/// A compiled path in the XPath subset used by documents:
///
///   path      := ('.' | '/' | '//')? step (('/' | '//') step)* ('/' '@' qname)?
///   step      := '.' | '*' | qname predicate*
///   predicate := '[' term ('and' term)* ']'
///   term      := '@' qname ('=' literal)? | step ('/' step)*
///
/// No functions, positional predicates or parent axis.
class Selector {
 public:
  enum class Axis { child, descendant, self };

  struct NameTest {
    bool any = false;
    bool qualified = false;
    std::string ns_uri;
    std::string local;
  };

  struct Step;

  struct AttributeTest {
    NameTest name;
    std::optional<std::string> value;  // absent: existence test
  };

  struct PathTest {
    std::vector<Step> steps;  // relative, child axis
  };

  using Term = std::variant<AttributeTest, PathTest>;

  struct Step {
    Axis axis = Axis::child;
    NameTest name;
    std::vector<std::vector<Term>> predicates;  // each predicate is a conjunction
  };

  static Selector compile(std::string_view path, const NamespaceMap& namespaces);

  /// Matches in document order without duplicates. Relative paths start at
  /// `context`; absolute ones at the root of its tree.
  std::vector<const xml::Element*> select(const xml::Element& context) const;
  std::vector<xml::Element*> select(xml::Element& context) const;

  /// Attribute values for a terminal `@attr` step, otherwise the trimmed
  /// character data of each selected element.
  std::vector<std::string> select_strings(const xml::Element& context) const;

  const std::string& text() const noexcept { return text_; }
  bool absolute() const noexcept { return absolute_; }
  const std::optional<NameTest>& terminal_attribute() const noexcept { return attribute_; }

 private:
  std::string text_;
  bool absolute_ = false;
  std::vector<Step> steps_;
  std::optional<NameTest> attribute_;
};

inline Selector compile_selector(std::string_view path, const NamespaceMap& namespaces) {
  return Selector::compile(path, namespaces);
}

}  // namespace compdoc
