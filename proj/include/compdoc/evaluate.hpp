#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compdoc/dictionary.hpp"
#include "compdoc/mathml.hpp"
#include "compdoc/quantity.hpp"

namespace compdoc {

/// Base for decorated domain objects that formulae can hold and pass to
/// registered functions (atoms, bonds, ...).
class DomainObject {
 public:
  virtual ~DomainObject() = default;
  virtual std::string_view kind() const = 0;
  virtual std::string label() const = 0;
};

using ObjectRef = std::shared_ptr<const DomainObject>;

struct Value {
  std::variant<Scalar, bool, std::vector<Value>, ObjectRef> data;

  static Value number(double v) { return Value{Scalar{v, {}, {}}}; }
  static Value scalar(Scalar s) { return Value{std::move(s)}; }
  static Value boolean(bool b) { return Value{b}; }
  static Value sequence(std::vector<Value> items) { return Value{std::move(items)}; }
  static Value object(ObjectRef o) { return Value{std::move(o)}; }

  bool is_scalar() const noexcept { return std::holds_alternative<Scalar>(data); }
  bool is_bool() const noexcept { return std::holds_alternative<bool>(data); }
  bool is_sequence() const noexcept { return std::holds_alternative<std::vector<Value>>(data); }
  bool is_object() const noexcept { return std::holds_alternative<ObjectRef>(data); }

  // These throw a type error naming what was found instead.
  const Scalar& as_scalar() const;
  bool as_bool() const;
  const std::vector<Value>& as_sequence() const;
  const ObjectRef& as_object() const;

  std::string describe() const;

  friend bool operator==(const Value&, const Value&) = default;
};

/// Static type of an expression, used for declared function signatures and
/// for dimension inference without evaluating.
struct ValueType {
  enum class Kind { unknown, scalar, boolean, sequence, object };
  Kind kind = Kind::unknown;
  Dimension dimension;
  Unit unit;
  std::string object_kind;  // object kind, or element kind of a sequence

  static ValueType unknown() { return {}; }
  static ValueType scalar(Dimension d, Unit u = {}) { return {Kind::scalar, d, std::move(u), {}}; }
  static ValueType dimensionless() { return scalar({}); }
  static ValueType boolean() { return {Kind::boolean, {}, {}, {}}; }
  static ValueType sequence(std::string element_kind = {}) { return {Kind::sequence, {}, {}, std::move(element_kind)}; }
  static ValueType object(std::string kind) { return {Kind::object, {}, {}, std::move(kind)}; }

  static ValueType of(const Value& v);
};

/// A host function callable from `<csymbol>`. Parameter kinds are object
/// kinds ("atom", "bond", ...), "scalar", or "any".
struct NativeFunction {
  std::vector<std::string> parameters;
  ValueType result;
  std::function<Value(std::span<const Value>)> body;
};

/// Immutable evaluation environment. Every `bind`/`with_*` returns a new
/// Context sharing structure with its parent; the parent never changes.
class Context {
 public:
  Context();

  Context bind(std::string name, Value value) const;
  const Value* lookup(std::string_view name) const;
  const Value& get(std::string_view name) const;
  /// Innermost binding first.
  std::vector<std::pair<std::string, const Value*>> bindings() const;

  /// Throws on an existing registration under the same key.
  Context with_function(std::string name_or_uri, NativeFunction fn) const;
  /// Exact name first, then the csymbol's definitionURL.
  const NativeFunction* find_function(const mathml::Symbol& symbol) const;
  const NativeFunction* find_function(std::string_view key) const;

  Context with_dictionaries(std::shared_ptr<const DictionarySet> dicts) const;
  /// The library's built-in set unless replaced.
  const DictionarySet& dictionaries() const;

 private:
  struct Binding {
    std::string name;
    Value value;
    std::shared_ptr<const Binding> parent;
  };
  using FunctionTable = std::map<std::string, NativeFunction, std::less<>>;

  std::shared_ptr<const Binding> bindings_;
  std::shared_ptr<const FunctionTable> functions_;
  std::shared_ptr<const DictionarySet> dictionaries_;
};

Context register_function(const Context& ctx, std::string name_or_uri, NativeFunction fn);

/// Evaluates `e` against `ctx`. Pure and deterministic; sums and products
/// accumulate left to right in domain order.
Value eval(const mathml::Expr& e, const Context& ctx);

/// Identifier types for static inference.
using TypeEnv = std::map<std::string, ValueType, std::less<>>;

/// Infers the result type of `e` without evaluating it. Bound variables of
/// quantifiers are typed from the domain's element kind when known. Throws
/// a dimension-mismatch error when the formula is inconsistent under `env`.
ValueType infer_type(const mathml::Expr& e, const TypeEnv& env, const Context& functions);
/// As above with `env` derived from the values bound in `ctx`.
ValueType infer_type(const mathml::Expr& e, const Context& ctx);

}  // namespace compdoc
