#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compdoc/xml.hpp"

namespace compdoc::mathml {

/// The frozen Content MathML operator subset. Anything else is rejected at parse time.
enum class Op {
  plus, minus, times, divide, power, root,
  sin, cos, tan, arccos, exp, ln, abs,
  min, max,
  eq, lt, gt, leq, geq,
  logical_and, logical_or, logical_not,
};

std::string_view element_name(Op op);
std::optional<Op> op_from_element(std::string_view local_name);

enum class Quantifier { sum, product };

struct Expr;

/// `<cn>`; `units` is an optional unit expression resolved through the dictionaries.
struct Number {
  double value = 0.0;
  bool integer = false;
  std::string units;

  friend bool operator==(const Number&, const Number&) = default;
};

/// `<ci>`; `type` is the optional hint attribute (e.g. "set").
struct Identifier {
  std::string name;
  std::string type;

  friend bool operator==(const Identifier&, const Identifier&) = default;
};

/// `<csymbol>` naming an externally registered function. `name` comes from the
/// `func` attribute when present, otherwise from the element text.
struct Symbol {
  std::string name;
  std::string definition_url;
  std::string label;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Apply {
  std::variant<Op, Symbol> head;
  std::vector<Expr> args;
  std::vector<Expr> degree;  // `<degree>` qualifier of root; zero or one element

  friend bool operator==(const Apply&, const Apply&) = default;
};

/// `<apply><sum/><bvar/><condition><apply><in/><ci>v</ci>SET</apply></condition>BODY</apply>`
struct Quantified {
  Quantifier kind = Quantifier::sum;
  std::string variable;
  std::vector<Expr> parts;  // [domain, body]

  const Expr& domain() const { return parts.at(0); }
  const Expr& body() const { return parts.at(1); }

  friend bool operator==(const Quantified&, const Quantified&) = default;
};

struct Expr {
  std::variant<Number, Identifier, Apply, Quantified> node;

  friend bool operator==(const Expr&, const Expr&) = default;
};

// Convenience constructors, mostly for tests and generated formulae.
Expr number(double value);
Expr integer(long long value);
Expr ident(std::string name, std::string type = {});
Expr apply(Op op, std::vector<Expr> args);
Expr apply(Symbol fn, std::vector<Expr> args);
Expr quantified(Quantifier kind, std::string variable, Expr domain, Expr body);

/// Parses a fragment whose root is either `<math>` or an expression element.
/// Elements must be unqualified or in the MathML namespace.
Expr parse_mathml(std::string_view xml_text);
Expr from_element(const xml::Element& element);

struct WriteOptions {
  std::string prefix;           // element prefix, e.g. "m"
  bool declare_namespace = false;
};

std::unique_ptr<xml::Element> to_element(const Expr& e, const WriteOptions& options = {});
std::string serialize_mathml(const Expr& e, const WriteOptions& options = {});

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

/// Every identifier referenced without being bound by an enclosing quantifier.
std::vector<std::string> free_identifiers(const Expr& e);
/// Every function name or URI referenced by a csymbol.
std::vector<Symbol> referenced_symbols(const Expr& e);

}  // namespace compdoc::mathml
