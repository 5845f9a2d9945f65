#include "compdoc/mathml.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <utility>

#include "compdoc/error.hpp"

namespace compdoc::mathml {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 23> kOps = {{
    {Op::plus, "plus"},     {Op::minus, "minus"},     {Op::times, "times"},
    {Op::divide, "divide"}, {Op::power, "power"},     {Op::root, "root"},
    {Op::sin, "sin"},       {Op::cos, "cos"},         {Op::tan, "tan"},
    {Op::arccos, "arccos"}, {Op::exp, "exp"},         {Op::ln, "ln"},
    {Op::abs, "abs"},       {Op::min, "min"},         {Op::max, "max"},
    {Op::eq, "eq"},         {Op::lt, "lt"},           {Op::gt, "gt"},
    {Op::leq, "leq"},       {Op::geq, "geq"},         {Op::logical_and, "and"},
    {Op::logical_or, "or"}, {Op::logical_not, "not"},
}};

std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string where(const xml::Element& e) {
  return e.line() > 0 ? " (line " + std::to_string(e.line()) + ")" : std::string{};
}

void check_namespace(const xml::Element& e) {
  const std::string ns = e.namespace_uri();
  if (!ns.empty() && ns != xml::kMathMLNamespace) {
    fail(Errc::unsupported_element,
         "unsupported element '" + e.name() + "' in namespace " + ns + where(e));
  }
}

void check_arity(Op op, std::size_t n, const xml::Element& e) {
  bool ok = true;
  switch (op) {
    case Op::sin: case Op::cos: case Op::tan: case Op::arccos: case Op::exp:
    case Op::ln: case Op::abs: case Op::logical_not: case Op::root:
      ok = n == 1;
      break;
    case Op::minus:
      ok = n == 1 || n == 2;
      break;
    case Op::divide: case Op::power:
      ok = n == 2;
      break;
    case Op::eq: case Op::lt: case Op::gt: case Op::leq: case Op::geq:
      ok = n >= 2;
      break;
    default:
      ok = n >= 1;
  }
  if (!ok) {
    fail(Errc::structural, "operator '" + std::string(element_name(op)) + "' applied to " +
                               std::to_string(n) + " argument(s)" + where(e));
  }
}

Number parse_number(const xml::Element& e) {
  const std::string text = trimmed(e.text());
  Number n;
  const std::string* type = e.attribute("type");
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(Errc::structural, "<cn> holds '" + text + "', not a number" + where(e));
  }
  n.value = value;
  n.integer = text.find_first_of(".eE") == std::string::npos && std::abs(value) < 9.007199254740992e15;
  if (type != nullptr) {
    if (*type == "integer") {
      if (!n.integer) fail(Errc::structural, "<cn type=\"integer\"> holds '" + text + "'" + where(e));
    } else if (*type == "real") {
      n.integer = false;
    } else {
      fail(Errc::unsupported_element, "unsupported <cn> type '" + *type + "'" + where(e));
    }
  }
  if (const auto* u = e.attribute("units")) n.units = *u;
  return n;
}

Expr parse_expr(const xml::Element& e);

Expr parse_apply(const xml::Element& e) {
  const auto kids = e.child_elements();
  if (kids.empty()) fail(Errc::structural, "empty <apply>" + where(e));
  const xml::Element& head = *kids.front();
  check_namespace(head);
  const std::string_view head_name = head.local_name();

  std::vector<const xml::Element*> bvars, conditions, degrees, operands;
  for (std::size_t i = 1; i < kids.size(); ++i) {
    check_namespace(*kids[i]);
    const std::string_view n = kids[i]->local_name();
    if (n == "bvar") {
      bvars.push_back(kids[i]);
    } else if (n == "condition") {
      conditions.push_back(kids[i]);
    } else if (n == "degree") {
      degrees.push_back(kids[i]);
    } else {
      operands.push_back(kids[i]);
    }
  }

  if (head_name == "sum" || head_name == "product") {
    if (bvars.size() != 1) {
      fail(Errc::structural, "<" + std::string(head_name) + "> requires exactly one <bvar>" + where(e));
    }
    const auto bv_kids = bvars[0]->child_elements();
    if (bv_kids.size() != 1 || bv_kids[0]->local_name() != "ci") {
      fail(Errc::structural, "<bvar> must hold a single <ci>" + where(*bvars[0]));
    }
    const std::string var = trimmed(bv_kids[0]->text());
    if (var.empty()) fail(Errc::structural, "empty bound-variable name" + where(*bvars[0]));
    if (conditions.size() != 1) {
      fail(Errc::structural, "<" + std::string(head_name) + "> requires a <condition> over a set" + where(e));
    }
    const auto cond_kids = conditions[0]->child_elements();
    if (cond_kids.size() != 1 || cond_kids[0]->local_name() != "apply") {
      fail(Errc::structural, "<condition> must hold <apply><in/>...</apply>" + where(*conditions[0]));
    }
    const auto in_kids = cond_kids[0]->child_elements();
    if (in_kids.size() != 3 || in_kids[0]->local_name() != "in") {
      if (!in_kids.empty()) check_namespace(*in_kids[0]);
      if (!in_kids.empty() && in_kids[0]->local_name() != "in") {
        fail(Errc::unsupported_element,
             "unsupported condition '" + in_kids[0]->name() + "'; only <in> is supported" + where(*cond_kids[0]));
      }
      fail(Errc::structural, "<in> condition takes the bound variable and a set" + where(*cond_kids[0]));
    }
    if (in_kids[1]->local_name() != "ci" || trimmed(in_kids[1]->text()) != var) {
      fail(Errc::structural, "<in> condition must test the bound variable '" + var + "'" + where(*cond_kids[0]));
    }
    if (operands.size() != 1) {
      fail(Errc::structural, "<" + std::string(head_name) + "> takes exactly one body expression" + where(e));
    }
    Quantified q;
    q.kind = head_name == "sum" ? Quantifier::sum : Quantifier::product;
    q.variable = var;
    q.parts.push_back(parse_expr(*in_kids[2]));
    q.parts.push_back(parse_expr(*operands[0]));
    return Expr{std::move(q)};
  }

  if (!bvars.empty() || !conditions.empty()) {
    fail(Errc::structural, "<bvar>/<condition> only allowed with <sum> or <product>" + where(e));
  }

  Apply a;
  if (head_name == "csymbol") {
    Symbol s;
    s.label = trimmed(head.text());
    if (const auto* f = head.attribute("func")) {
      s.name = *f;
    } else {
      s.name = s.label;
    }
    if (const auto* url = head.attribute("definitionURL")) s.definition_url = *url;
    if (s.name.empty() && s.definition_url.empty()) {
      fail(Errc::structural, "<csymbol> names no function" + where(head));
    }
    a.head = std::move(s);
    if (!degrees.empty()) fail(Errc::structural, "<degree> only allowed with <root>" + where(e));
  } else {
    const auto op = op_from_element(head_name);
    if (!op) fail(Errc::unsupported_element, "unsupported element '" + head.name() + "'" + where(head));
    if (!head.child_elements().empty()) {
      fail(Errc::structural, "operator element <" + head.name() + "> must be empty" + where(head));
    }
    if (!degrees.empty()) {
      if (*op != Op::root || degrees.size() != 1) {
        fail(Errc::structural, "<degree> only allowed once, with <root>" + where(e));
      }
      const auto dk = degrees[0]->child_elements();
      if (dk.size() != 1) fail(Errc::structural, "<degree> must hold one expression" + where(*degrees[0]));
      a.degree.push_back(parse_expr(*dk[0]));
    }
    check_arity(*op, operands.size(), e);
    a.head = *op;
  }
  for (const auto* o : operands) a.args.push_back(parse_expr(*o));
  if (std::holds_alternative<Symbol>(a.head) && a.args.empty()) {
    fail(Errc::structural, "function application without arguments" + where(e));
  }
  return Expr{std::move(a)};
}

Expr parse_expr(const xml::Element& e) {
  check_namespace(e);
  const std::string_view n = e.local_name();
  if (n == "cn") return Expr{parse_number(e)};
  if (n == "ci") {
    Identifier id;
    id.name = trimmed(e.text());
    if (id.name.empty()) fail(Errc::structural, "empty <ci>" + where(e));
    if (const auto* t = e.attribute("type")) id.type = *t;
    return Expr{std::move(id)};
  }
  if (n == "apply") return parse_apply(e);
  if (n == "math") {
    const auto kids = e.child_elements();
    if (kids.size() != 1) fail(Errc::structural, "<math> must hold exactly one expression" + where(e));
    return parse_expr(*kids[0]);
  }
  if (n == "bvar" || n == "condition" || n == "degree" || n == "csymbol" || op_from_element(n) ||
      n == "sum" || n == "product" || n == "in") {
    fail(Errc::structural, "<" + e.name() + "> is only valid inside <apply>" + where(e));
  }
  fail(Errc::unsupported_element, "unsupported element '" + e.name() + "'" + where(e));
}

void collect_free(const Expr& e, std::set<std::string>& bound, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Identifier>) {
          if (!bound.count(node.name)) {
            bool seen = false;
            for (const auto& s : out) seen = seen || s == node.name;
            if (!seen) out.push_back(node.name);
          }
        } else if constexpr (std::is_same_v<T, Apply>) {
          for (const auto& d : node.degree) collect_free(d, bound, out);
          for (const auto& a : node.args) collect_free(a, bound, out);
        } else if constexpr (std::is_same_v<T, Quantified>) {
          collect_free(node.domain(), bound, out);
          const bool was_bound = bound.count(node.variable) > 0;
          bound.insert(node.variable);
          collect_free(node.body(), bound, out);
          if (!was_bound) bound.erase(node.variable);
        }
      },
      e.node);
}

void collect_symbols(const Expr& e, std::vector<Symbol>& out) {
  if (const auto* a = std::get_if<Apply>(&e.node)) {
    if (const auto* s = std::get_if<Symbol>(&a->head)) {
      bool seen = false;
      for (const auto& x : out) seen = seen || x == *s;
      if (!seen) out.push_back(*s);
    }
    for (const auto& d : a->degree) collect_symbols(d, out);
    for (const auto& arg : a->args) collect_symbols(arg, out);
  } else if (const auto* q = std::get_if<Quantified>(&e.node)) {
    collect_symbols(q->domain(), out);
    collect_symbols(q->body(), out);
  }
}

std::string qualified(const WriteOptions& o, std::string_view local) {
  return o.prefix.empty() ? std::string(local) : o.prefix + ":" + std::string(local);
}

std::unique_ptr<xml::Element> leaf(const WriteOptions& o, std::string_view local, std::string text) {
  auto e = std::make_unique<xml::Element>(qualified(o, local));
  e->set_text(std::move(text));
  return e;
}

std::unique_ptr<xml::Element> write_expr(const Expr& expr, const WriteOptions& o) {
  return std::visit(
      [&](const auto& node) -> std::unique_ptr<xml::Element> {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Number>) {
          std::string text;
          if (node.integer) {
            text = std::to_string(static_cast<long long>(node.value));
          } else {
            text = format_number(node.value);
            if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
          }
          auto e = leaf(o, "cn", std::move(text));
          if (!node.units.empty()) e->set_attribute("units", node.units);
          return e;
        } else if constexpr (std::is_same_v<T, Identifier>) {
          auto e = leaf(o, "ci", node.name);
          if (!node.type.empty()) e->set_attribute("type", node.type);
          return e;
        } else if constexpr (std::is_same_v<T, Apply>) {
          auto e = std::make_unique<xml::Element>(qualified(o, "apply"));
          if (const auto* op = std::get_if<Op>(&node.head)) {
            e->append(std::make_unique<xml::Element>(qualified(o, element_name(*op))));
          } else {
            const auto& s = std::get<Symbol>(node.head);
            auto cs = leaf(o, "csymbol", s.label);
            if (s.name != s.label) cs->set_attribute("func", s.name);
            if (!s.definition_url.empty()) cs->set_attribute("definitionURL", s.definition_url);
            e->append(std::move(cs));
          }
          for (const auto& d : node.degree) {
            auto deg = std::make_unique<xml::Element>(qualified(o, "degree"));
            deg->append(write_expr(d, o));
            e->append(std::move(deg));
          }
          for (const auto& a : node.args) e->append(write_expr(a, o));
          return e;
        } else {
          auto e = std::make_unique<xml::Element>(qualified(o, "apply"));
          e->append(std::make_unique<xml::Element>(
              qualified(o, node.kind == Quantifier::sum ? "sum" : "product")));
          auto& bvar = e->append(std::make_unique<xml::Element>(qualified(o, "bvar")));
          bvar.append(leaf(o, "ci", node.variable));
          auto& cond = e->append(std::make_unique<xml::Element>(qualified(o, "condition")));
          auto& in = cond.append(std::make_unique<xml::Element>(qualified(o, "apply")));
          in.append(std::make_unique<xml::Element>(qualified(o, "in")));
          in.append(leaf(o, "ci", node.variable));
          in.append(write_expr(node.domain(), o));
          e->append(write_expr(node.body(), o));
          return e;
        }
      },
      expr.node);
}

}  // namespace

std::string_view element_name(Op op) {
  for (const auto& [o, name] : kOps) {
    if (o == op) return name;
  }
  return "?";
}

std::optional<Op> op_from_element(std::string_view local_name) {
  for (const auto& [o, name] : kOps) {
    if (name == local_name) return o;
  }
  return std::nullopt;
}

Expr number(double value) { return Expr{Number{value, false, {}}}; }
Expr integer(long long value) { return Expr{Number{static_cast<double>(value), true, {}}}; }
Expr ident(std::string name, std::string type) { return Expr{Identifier{std::move(name), std::move(type)}}; }
Expr apply(Op op, std::vector<Expr> args) { return Expr{Apply{op, std::move(args), {}}}; }
Expr apply(Symbol fn, std::vector<Expr> args) { return Expr{Apply{std::move(fn), std::move(args), {}}}; }

Expr quantified(Quantifier kind, std::string variable, Expr domain, Expr body) {
  Quantified q;
  q.kind = kind;
  q.variable = std::move(variable);
  q.parts.push_back(std::move(domain));
  q.parts.push_back(std::move(body));
  return Expr{std::move(q)};
}

Expr parse_mathml(std::string_view xml_text) {
  const auto root = xml::parse(xml_text, "mathml");
  return from_element(*root);
}

Expr from_element(const xml::Element& element) { return parse_expr(element); }

std::unique_ptr<xml::Element> to_element(const Expr& e, const WriteOptions& options) {
  auto el = write_expr(e, options);
  if (options.declare_namespace) {
    el->set_attribute(options.prefix.empty() ? "xmlns" : "xmlns:" + options.prefix,
                      std::string(xml::kMathMLNamespace));
  }
  return el;
}

std::string serialize_mathml(const Expr& e, const WriteOptions& options) {
  return xml::serialize(*to_element(e, options), {.declaration = false, .indent = false});
}

std::string format_number(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<std::string> free_identifiers(const Expr& e) {
  std::set<std::string> bound;
  std::vector<std::string> out;
  collect_free(e, bound, out);
  return out;
}

std::vector<Symbol> referenced_symbols(const Expr& e) {
  std::vector<Symbol> out;
  collect_symbols(e, out);
  return out;
}

}  // namespace compdoc::mathml
