#include "compdoc/evaluate.hpp"

#include <cmath>
#include <utility>

#include "compdoc/error.hpp"

namespace compdoc {

using mathml::Apply;
using mathml::Expr;
using mathml::Identifier;
using mathml::Number;
using mathml::Op;
using mathml::Quantified;
using mathml::Quantifier;
using mathml::Symbol;

// ---------------------------------------------------------------------------
// Value

namespace {

std::string describe_scalar(const Scalar& s) {
  std::string out = mathml::format_number(s.value);
  if (!s.unit.empty()) {
    out += " " + s.unit.to_string();
  } else if (!s.dimension.dimensionless()) {
    out += " [" + s.dimension.to_string() + "]";
  }
  return out;
}

std::string describe_type(const Scalar& s) {
  std::string out = s.dimension.to_string();
  if (!s.unit.empty()) out += " (" + s.unit.to_string() + ")";
  return out;
}

}  // namespace

const Scalar& Value::as_scalar() const {
  if (const auto* s = std::get_if<Scalar>(&data)) return *s;
  fail(Errc::type_error, "expected a scalar, found " + describe());
}

bool Value::as_bool() const {
  if (const auto* b = std::get_if<bool>(&data)) return *b;
  fail(Errc::type_error, "expected a boolean, found " + describe());
}

const std::vector<Value>& Value::as_sequence() const {
  if (const auto* s = std::get_if<std::vector<Value>>(&data)) return *s;
  fail(Errc::type_error, "expected a sequence, found " + describe());
}

const ObjectRef& Value::as_object() const {
  if (const auto* o = std::get_if<ObjectRef>(&data)) return *o;
  fail(Errc::type_error, "expected a domain object, found " + describe());
}

std::string Value::describe() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Scalar>) {
          return "scalar " + describe_scalar(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "boolean true" : "boolean false";
        } else if constexpr (std::is_same_v<T, std::vector<Value>>) {
          return "sequence of " + std::to_string(v.size());
        } else {
          return v ? std::string(v->kind()) + " " + v->label() : std::string("null object");
        }
      },
      data);
}

ValueType ValueType::of(const Value& v) {
  if (v.is_scalar()) return scalar(v.as_scalar().dimension, v.as_scalar().unit);
  if (v.is_bool()) return boolean();
  if (v.is_object()) return object(v.as_object() ? std::string(v.as_object()->kind()) : std::string{});
  std::string element_kind;
  const auto& items = v.as_sequence();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string k = items[i].is_object() && items[i].as_object()
                              ? std::string(items[i].as_object()->kind())
                              : std::string(items[i].is_scalar() ? "scalar" : "");
    if (i == 0) {
      element_kind = k;
    } else if (k != element_kind) {
      element_kind.clear();
      break;
    }
  }
  return sequence(element_kind);
}

// ---------------------------------------------------------------------------
// Context

Context::Context() : functions_(std::make_shared<const FunctionTable>()) {}

const DictionarySet& Context::dictionaries() const {
  return dictionaries_ ? *dictionaries_ : DictionarySet::builtin();
}

Context Context::bind(std::string name, Value value) const {
  Context c = *this;
  c.bindings_ = std::make_shared<const Binding>(Binding{std::move(name), std::move(value), bindings_});
  return c;
}

const Value* Context::lookup(std::string_view name) const {
  for (const Binding* b = bindings_.get(); b != nullptr; b = b->parent.get()) {
    if (b->name == name) return &b->value;
  }
  return nullptr;
}

const Value& Context::get(std::string_view name) const {
  if (const Value* v = lookup(name)) return *v;
  fail(Errc::unbound_identifier, "unbound identifier '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, const Value*>> Context::bindings() const {
  std::vector<std::pair<std::string, const Value*>> out;
  for (const Binding* b = bindings_.get(); b != nullptr; b = b->parent.get()) out.emplace_back(b->name, &b->value);
  return out;
}

Context Context::with_function(std::string name_or_uri, NativeFunction fn) const {
  if (name_or_uri.empty()) fail(Errc::duplicate_registration, "function name must not be empty");
  if (functions_->count(name_or_uri)) {
    fail(Errc::duplicate_registration, "function '" + name_or_uri + "' is already registered");
  }
  auto table = std::make_shared<FunctionTable>(*functions_);
  table->emplace(std::move(name_or_uri), std::move(fn));
  Context c = *this;
  c.functions_ = std::move(table);
  return c;
}

const NativeFunction* Context::find_function(std::string_view key) const {
  const auto it = functions_->find(key);
  return it == functions_->end() ? nullptr : &it->second;
}

const NativeFunction* Context::find_function(const Symbol& symbol) const {
  if (!symbol.name.empty()) {
    if (const auto* f = find_function(symbol.name)) return f;
  }
  if (!symbol.definition_url.empty()) return find_function(symbol.definition_url);
  return nullptr;
}

Context Context::with_dictionaries(std::shared_ptr<const DictionarySet> dicts) const {
  Context c = *this;
  c.dictionaries_ = std::move(dicts);
  return c;
}

Context register_function(const Context& ctx, std::string name_or_uri, NativeFunction fn) {
  return ctx.with_function(std::move(name_or_uri), std::move(fn));
}

// ---------------------------------------------------------------------------
// Dimensioned arithmetic

namespace {

std::string symbol_key(const Symbol& s) { return s.name.empty() ? s.definition_url : s.name; }

Unit unify_units(const Unit& a, const Unit& b, std::string_view op) {
  if (a == b || b.empty()) return a;
  if (a.empty()) return b;
  fail(Errc::dimension_mismatch, std::string(op) + ": incompatible units " + a.to_string() + " and " + b.to_string());
}

void require_same(const Dimension& da, const Unit& ua, const Dimension& db, const Unit& ub, std::string_view op) {
  if (!(da == db)) {
    Scalar a{0, da, ua}, b{0, db, ub};
    fail(Errc::dimension_mismatch,
         std::string(op) + ": dimension mismatch between " + describe_type(a) + " and " + describe_type(b));
  }
  unify_units(ua, ub, op);
}

void require_dimensionless(const Dimension& d, const Unit& u, std::string_view op) {
  if (!d.dimensionless()) {
    fail(Errc::dimension_mismatch, std::string(op) + ": argument must be dimensionless, got " + d.to_string());
  }
  (void)u;
}

void require_angle(const Scalar& s, std::string_view op) {
  require_dimensionless(s.dimension, s.unit, op);
  if (!s.unit.empty() && !(s.unit == Unit("radian"))) {
    fail(Errc::dimension_mismatch, std::string(op) + ": angle must be in radian, got " + s.unit.to_string());
  }
}

std::optional<int> as_integer(double v) {
  if (std::nearbyint(v) == v && std::abs(v) < 1e9) return static_cast<int>(v);
  return std::nullopt;
}

Scalar checked(Scalar s, std::string_view op) {
  if (std::isnan(s.value)) fail(Errc::numeric_domain, std::string(op) + ": result is not a number");
  return s;
}

bool compare(Op op, double a, double b) {
  switch (op) {
    case Op::eq: return a == b;
    case Op::lt: return a < b;
    case Op::gt: return a > b;
    case Op::leq: return a <= b;
    default: return a >= b;
  }
}

class Evaluator {
 public:
  Value eval(const Expr& e, const Context& ctx) const {
    return std::visit([&](const auto& node) { return eval_node(node, ctx); }, e.node);
  }

 private:
  Value eval_node(const Number& n, const Context& ctx) const {
    if (n.units.empty()) return Value::number(n.value);
    return Value::scalar(ctx.dictionaries().canonical(n.value, Unit::parse(n.units)));
  }

  Value eval_node(const Identifier& id, const Context& ctx) const { return ctx.get(id.name); }

  Value eval_node(const Quantified& q, const Context& ctx) const {
    const Value domain = eval(q.domain(), ctx);
    if (!domain.is_sequence()) {
      fail(Errc::type_error, "cannot iterate '" + q.variable + "' over " + domain.describe());
    }
    const auto& items = domain.as_sequence();
    const std::string_view op = q.kind == Quantifier::sum ? "sum" : "product";
    if (items.empty()) {
      if (q.kind == Quantifier::product) return Value::number(1.0);
      TypeEnv env;
      for (const auto& [name, v] : ctx.bindings()) env.emplace(name, ValueType::of(*v));
      env.insert_or_assign(q.variable, ValueType::unknown());
      const ValueType body = infer_type(q.body(), env, ctx);
      if (body.kind == ValueType::Kind::scalar) return Value::scalar(Scalar{0.0, body.dimension, body.unit});
      return Value::number(0.0);
    }
    Scalar acc;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const Value term = eval(q.body(), ctx.bind(q.variable, items[i]));
      if (!term.is_scalar()) fail(Errc::type_error, std::string(op) + " body produced " + term.describe());
      const Scalar& s = term.as_scalar();
      if (i == 0) {
        acc = s;
      } else if (q.kind == Quantifier::sum) {
        require_same(acc.dimension, acc.unit, s.dimension, s.unit, op);
        acc.unit = unify_units(acc.unit, s.unit, op);
        acc.value = acc.value + s.value;
      } else {
        acc = Scalar{acc.value * s.value, acc.dimension * s.dimension, acc.unit * s.unit};
      }
    }
    return Value::scalar(acc);
  }

  Value eval_node(const Apply& a, const Context& ctx) const {
    std::vector<Value> args;
    args.reserve(a.args.size());
    for (const auto& arg : a.args) args.push_back(eval(arg, ctx));
    if (const auto* s = std::get_if<Symbol>(&a.head)) return call(*s, args, ctx);
    const Op op = std::get<Op>(a.head);
    std::optional<Value> degree;
    if (!a.degree.empty()) degree = eval(a.degree.front(), ctx);
    return apply_op(op, args, degree);
  }

  static Value call(const Symbol& s, const std::vector<Value>& args, const Context& ctx) {
    const NativeFunction* fn = ctx.find_function(s);
    if (fn == nullptr) fail(Errc::unregistered_function, "unregistered function '" + symbol_key(s) + "'");
    if (fn->parameters.size() != args.size()) {
      fail(Errc::type_error, "function '" + symbol_key(s) + "' takes " + std::to_string(fn->parameters.size()) +
                                 " argument(s), got " + std::to_string(args.size()));
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
      const std::string& want = fn->parameters[i];
      const Value& got = args[i];
      bool ok = want == "any";
      if (want == "scalar") ok = got.is_scalar();
      else if (want == "sequence") ok = got.is_sequence();
      else if (want == "boolean") ok = got.is_bool();
      else if (!ok) ok = got.is_object() && got.as_object() && got.as_object()->kind() == want;
      if (!ok) {
        fail(Errc::type_error, "function '" + symbol_key(s) + "' argument " + std::to_string(i + 1) +
                                   " expects " + want + ", got " + got.describe());
      }
    }
    return fn->body(std::span<const Value>(args));
  }

  static const Scalar& scalar_arg(const Value& v, Op op) {
    if (!v.is_scalar()) {
      fail(Errc::type_error, std::string(mathml::element_name(op)) + " expects scalars, got " + v.describe());
    }
    return v.as_scalar();
  }

  static Value apply_op(Op op, const std::vector<Value>& args, const std::optional<Value>& degree) {
    const std::string_view name = mathml::element_name(op);
    switch (op) {
      case Op::plus: {
        Scalar acc = scalar_arg(args[0], op);
        for (std::size_t i = 1; i < args.size(); ++i) {
          const Scalar& s = scalar_arg(args[i], op);
          require_same(acc.dimension, acc.unit, s.dimension, s.unit, name);
          acc.unit = unify_units(acc.unit, s.unit, name);
          acc.value = acc.value + s.value;
        }
        return Value::scalar(acc);
      }
      case Op::minus: {
        Scalar a = scalar_arg(args[0], op);
        if (args.size() == 1) {
          a.value = -a.value;
          return Value::scalar(a);
        }
        const Scalar& b = scalar_arg(args[1], op);
        require_same(a.dimension, a.unit, b.dimension, b.unit, name);
        return Value::scalar(Scalar{a.value - b.value, a.dimension, unify_units(a.unit, b.unit, name)});
      }
      case Op::times: {
        Scalar acc = scalar_arg(args[0], op);
        for (std::size_t i = 1; i < args.size(); ++i) {
          const Scalar& s = scalar_arg(args[i], op);
          acc = Scalar{acc.value * s.value, acc.dimension * s.dimension, acc.unit * s.unit};
        }
        return Value::scalar(acc);
      }
      case Op::divide: {
        const Scalar& a = scalar_arg(args[0], op);
        const Scalar& b = scalar_arg(args[1], op);
        if (b.value == 0.0) fail(Errc::numeric_domain, "divide: division by zero");
        return Value::scalar(Scalar{a.value / b.value, a.dimension / b.dimension, a.unit / b.unit});
      }
      case Op::power: {
        const Scalar& base = scalar_arg(args[0], op);
        const Scalar& ex = scalar_arg(args[1], op);
        require_dimensionless(ex.dimension, ex.unit, "power exponent");
        // Squares are exact products; std::pow may differ from x*x in the last bit.
        Scalar r{ex.value == 2.0 ? base.value * base.value : std::pow(base.value, ex.value), {}, {}};
        if (!base.dimension.dimensionless() || !base.unit.empty()) {
          const auto n = as_integer(ex.value);
          if (!n) fail(Errc::dimension_mismatch, "power: non-integer exponent of a dimensioned base");
          r.dimension = base.dimension.pow(*n);
          r.unit = base.unit.pow(*n);
        }
        if (base.value == 0.0 && ex.value < 0) fail(Errc::numeric_domain, "power: zero to a negative power");
        return Value::scalar(checked(r, name));
      }
      case Op::root: {
        const Scalar& x = scalar_arg(args[0], op);
        double n = 2.0;
        if (degree) {
          const Scalar& d = scalar_arg(*degree, op);
          require_dimensionless(d.dimension, d.unit, "root degree");
          n = d.value;
        }
        if (n == 0.0) fail(Errc::numeric_domain, "root: zero degree");
        Scalar r{0.0, {}, {}};
        const auto ni = as_integer(n);
        if (x.value < 0 && !(ni && *ni % 2 != 0)) fail(Errc::numeric_domain, "root: negative radicand");
        if (n == 2.0) {
          r.value = std::sqrt(x.value);
        } else if (n == 3.0) {
          r.value = std::cbrt(x.value);
        } else {
          r.value = x.value < 0 ? -std::pow(-x.value, 1.0 / n) : std::pow(x.value, 1.0 / n);
        }
        if (!x.dimension.dimensionless() || !x.unit.empty()) {
          if (!ni) fail(Errc::dimension_mismatch, "root: non-integer degree of a dimensioned value");
          const auto d = x.dimension.root(*ni);
          const auto u = x.unit.root(*ni);
          if (!d || !u) {
            fail(Errc::dimension_mismatch, "root: " + x.dimension.to_string() + " has no integer root of degree " +
                                               std::to_string(*ni));
          }
          r.dimension = *d;
          r.unit = *u;
        }
        return Value::scalar(checked(r, name));
      }
      case Op::sin: case Op::cos: case Op::tan: {
        const Scalar& x = scalar_arg(args[0], op);
        require_angle(x, name);
        const double v = op == Op::sin ? std::sin(x.value) : op == Op::cos ? std::cos(x.value) : std::tan(x.value);
        return Value::scalar(checked(Scalar{v, {}, {}}, name));
      }
      case Op::arccos: {
        const Scalar& x = scalar_arg(args[0], op);
        require_dimensionless(x.dimension, x.unit, name);
        if (!(x.value >= -1.0 && x.value <= 1.0)) {
          fail(Errc::numeric_domain, "arccos: argument " + mathml::format_number(x.value) + " outside [-1, 1]");
        }
        return Value::scalar(Scalar{std::acos(x.value), {}, Unit("radian")});
      }
      case Op::exp: {
        const Scalar& x = scalar_arg(args[0], op);
        require_dimensionless(x.dimension, x.unit, name);
        return Value::scalar(checked(Scalar{std::exp(x.value), {}, {}}, name));
      }
      case Op::ln: {
        const Scalar& x = scalar_arg(args[0], op);
        require_dimensionless(x.dimension, x.unit, name);
        if (!(x.value > 0.0)) fail(Errc::numeric_domain, "ln: argument " + mathml::format_number(x.value) + " <= 0");
        return Value::scalar(Scalar{std::log(x.value), {}, {}});
      }
      case Op::abs: {
        Scalar x = scalar_arg(args[0], op);
        x.value = std::abs(x.value);
        return Value::scalar(x);
      }
      case Op::min: case Op::max: {
        Scalar best = scalar_arg(args[0], op);
        for (std::size_t i = 1; i < args.size(); ++i) {
          const Scalar& s = scalar_arg(args[i], op);
          require_same(best.dimension, best.unit, s.dimension, s.unit, name);
          const Unit u = unify_units(best.unit, s.unit, name);
          if (op == Op::min ? s.value < best.value : s.value > best.value) best.value = s.value;
          best.unit = u;
        }
        return Value::scalar(best);
      }
      case Op::eq: case Op::lt: case Op::gt: case Op::leq: case Op::geq: {
        bool result = true;
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
          const Scalar& a = scalar_arg(args[i], op);
          const Scalar& b = scalar_arg(args[i + 1], op);
          require_same(a.dimension, a.unit, b.dimension, b.unit, name);
          result = result && compare(op, a.value, b.value);
        }
        return Value::boolean(result);
      }
      case Op::logical_and: case Op::logical_or: {
        bool acc = op == Op::logical_and;
        for (const auto& v : args) {
          if (!v.is_bool()) fail(Errc::type_error, std::string(name) + " expects booleans, got " + v.describe());
          acc = op == Op::logical_and ? (acc && v.as_bool()) : (acc || v.as_bool());
        }
        return Value::boolean(acc);
      }
      case Op::logical_not:
        if (!args[0].is_bool()) fail(Errc::type_error, "not expects a boolean, got " + args[0].describe());
        return Value::boolean(!args[0].as_bool());
    }
    fail(Errc::unsupported_element, "unhandled operator");
  }
};

// ---------------------------------------------------------------------------
// Static inference

class Inferrer {
 public:
  explicit Inferrer(const Context& functions) : functions_(functions) {}

  ValueType infer(const Expr& e, const TypeEnv& env) const {
    return std::visit([&](const auto& node) { return infer_node(node, env); }, e.node);
  }

 private:
  const Context& functions_;

  ValueType infer_node(const Number& n, const TypeEnv&) const {
    if (n.units.empty()) return ValueType::dimensionless();
    const ResolvedUnit r = functions_.dictionaries().resolve(Unit::parse(n.units));
    return ValueType::scalar(r.dimension, r.canonical);
  }

  ValueType infer_node(const Identifier& id, const TypeEnv& env) const {
    const auto it = env.find(id.name);
    return it == env.end() ? ValueType::unknown() : it->second;
  }

  ValueType infer_node(const Quantified& q, const TypeEnv& env) const {
    const ValueType domain = infer(q.domain(), env);
    TypeEnv inner = env;
    ValueType element = ValueType::unknown();
    if (domain.kind == ValueType::Kind::sequence && !domain.object_kind.empty() && domain.object_kind != "scalar") {
      element = ValueType::object(domain.object_kind);
    }
    inner.insert_or_assign(q.variable, element);
    const ValueType body = infer(q.body(), inner);
    if (q.kind == Quantifier::sum) return body.kind == ValueType::Kind::scalar ? body : ValueType::unknown();
    if (body.kind == ValueType::Kind::scalar && body.dimension.dimensionless() && body.unit.empty()) return body;
    return ValueType::unknown();
  }

  static bool is_scalar(const ValueType& t) { return t.kind == ValueType::Kind::scalar; }

  static std::optional<double> constant(const Expr& e) {
    if (const auto* n = std::get_if<Number>(&e.node)) {
      if (n->units.empty()) return n->value;
    }
    return std::nullopt;
  }

  ValueType infer_node(const Apply& a, const TypeEnv& env) const {
    if (const auto* s = std::get_if<Symbol>(&a.head)) {
      for (const auto& arg : a.args) infer(arg, env);
      const NativeFunction* fn = functions_.find_function(*s);
      return fn ? fn->result : ValueType::unknown();
    }
    const Op op = std::get<Op>(a.head);
    const std::string_view name = mathml::element_name(op);
    std::vector<ValueType> args;
    for (const auto& arg : a.args) args.push_back(infer(arg, env));
    switch (op) {
      case Op::plus: case Op::minus: case Op::min: case Op::max:
      case Op::eq: case Op::lt: case Op::gt: case Op::leq: case Op::geq: {
        const ValueType* known = nullptr;
        Unit unit;
        for (const auto& t : args) {
          if (!is_scalar(t)) continue;
          if (known == nullptr) {
            known = &t;
            unit = t.unit;
          } else {
            require_same(known->dimension, unit, t.dimension, t.unit, name);
            unit = unify_units(unit, t.unit, name);
          }
        }
        const bool comparison = op == Op::eq || op == Op::lt || op == Op::gt || op == Op::leq || op == Op::geq;
        if (comparison) return ValueType::boolean();
        if (known == nullptr) return ValueType::unknown();
        bool all_known = true;
        for (const auto& t : args) all_known = all_known && is_scalar(t);
        if (!all_known) return ValueType::unknown();
        return ValueType::scalar(known->dimension, unit);
      }
      case Op::times: case Op::divide: {
        for (const auto& t : args) {
          if (!is_scalar(t)) return ValueType::unknown();
        }
        ValueType r = args[0];
        for (std::size_t i = 1; i < args.size(); ++i) {
          if (op == Op::times) {
            r.dimension = r.dimension * args[i].dimension;
            r.unit = r.unit * args[i].unit;
          } else {
            r.dimension = r.dimension / args[i].dimension;
            r.unit = r.unit / args[i].unit;
          }
        }
        return r;
      }
      case Op::power: {
        if (is_scalar(args[1])) require_dimensionless(args[1].dimension, args[1].unit, "power exponent");
        if (!is_scalar(args[0])) return ValueType::unknown();
        if (args[0].dimension.dimensionless() && args[0].unit.empty()) return ValueType::dimensionless();
        const auto c = constant(a.args[1]);
        const auto n = c ? as_integer(*c) : std::nullopt;
        if (!n) return ValueType::unknown();
        return ValueType::scalar(args[0].dimension.pow(*n), args[0].unit.pow(*n));
      }
      case Op::root: {
        if (!is_scalar(args[0])) return ValueType::unknown();
        if (args[0].dimension.dimensionless() && args[0].unit.empty()) return ValueType::dimensionless();
        int n = 2;
        if (!a.degree.empty()) {
          const auto c = constant(a.degree.front());
          const auto ni = c ? as_integer(*c) : std::nullopt;
          if (!ni) return ValueType::unknown();
          n = *ni;
        }
        const auto d = args[0].dimension.root(n);
        const auto u = args[0].unit.root(n);
        if (!d || !u) fail(Errc::dimension_mismatch, "root: " + args[0].dimension.to_string() + " has no integer root");
        return ValueType::scalar(*d, *u);
      }
      case Op::sin: case Op::cos: case Op::tan: case Op::exp: case Op::ln:
        if (is_scalar(args[0])) require_dimensionless(args[0].dimension, args[0].unit, name);
        return ValueType::dimensionless();
      case Op::arccos:
        if (is_scalar(args[0])) require_dimensionless(args[0].dimension, args[0].unit, name);
        return ValueType::scalar({}, Unit("radian"));
      case Op::abs:
        return args[0];
      case Op::logical_and: case Op::logical_or: case Op::logical_not:
        return ValueType::boolean();
    }
    return ValueType::unknown();
  }
};

}  // namespace

Value eval(const Expr& e, const Context& ctx) { return Evaluator{}.eval(e, ctx); }

ValueType infer_type(const Expr& e, const TypeEnv& env, const Context& functions) {
  return Inferrer(functions).infer(e, env);
}

ValueType infer_type(const Expr& e, const Context& ctx) {
  TypeEnv env;
  for (const auto& [name, v] : ctx.bindings()) env.emplace(name, ValueType::of(*v));
  return infer_type(e, env, ctx);
}

}  // namespace compdoc
