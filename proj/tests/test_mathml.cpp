#include "compdoc/mathml.hpp"

#include <random>

#include "support.hpp"

using namespace compdoc;
using namespace compdoc::mathml;
using testing_support::read_fixture;

TEST(ParseMathml, Addition) {
  const Expr e = parse_mathml(read_fixture("mathml/addition.xml"));
  EXPECT_EQ(e, apply(Op::plus, {integer(2), integer(2)}));
}

TEST(ParseMathml, NumberLeaf) {
  EXPECT_EQ(parse_mathml("<cn>7</cn>"), integer(7));
  const Expr r = parse_mathml("<cn type=\"real\">2.5</cn>");
  EXPECT_EQ(std::get<Number>(r.node).value, 2.5);
  EXPECT_FALSE(std::get<Number>(r.node).integer);
}

TEST(ParseMathml, FormulaWithIdentifiers) {
  const Expr e = parse_mathml(read_fixture("mathml/formula.xml"));
  EXPECT_EQ(e, apply(Op::plus, {apply(Op::power, {ident("x"), integer(2)}), ident("c")}));
}

TEST(ParseMathml, MassSumIsQuantified) {
  const Expr e = parse_mathml(read_fixture("mathml/mass_sum.xml"));
  const auto* q = std::get_if<Quantified>(&e.node);
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(q->kind, Quantifier::sum);
  EXPECT_EQ(q->variable, "atom");
  EXPECT_EQ(q->domain(), ident("atoms", "set"));
  const auto* body = std::get_if<Apply>(&q->body().node);
  ASSERT_NE(body, nullptr);
  const auto* fn = std::get_if<Symbol>(&body->head);
  ASSERT_NE(fn, nullptr);
  EXPECT_EQ(fn->name, "getMass");
  EXPECT_EQ(fn->label, "w");
  EXPECT_EQ(body->args, std::vector<Expr>{ident("atom")});
}

TEST(ParseMathml, NamespacedMathWrapper) {
  const Expr e = parse_mathml(read_fixture("mathml/mass_sum_uri.xml"));
  const auto& q = std::get<Quantified>(e.node);
  const auto& fn = std::get<Symbol>(std::get<Apply>(q.body().node).head);
  EXPECT_EQ(fn.definition_url, "http://ex.org/chem#getMass");
}

TEST(ParseMathml, Errors) {
  try {
    parse_mathml("<apply><plus/>\n<cn>1</cn>\n<cn>2</apply>");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::xml_parse);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_ERRC_MSG(parse_mathml("<apply><arcsinh/><cn>1</cn></apply>"), Errc::unsupported_element, "arcsinh");
  EXPECT_ERRC_MSG(parse_mathml("<matrix/>"), Errc::unsupported_element, "matrix");
  EXPECT_ERRC(parse_mathml("<apply><sum/><condition><apply><in/><ci>a</ci><ci>s</ci></apply></condition>"
                           "<ci>a</ci></apply>"),
              Errc::structural);
  EXPECT_ERRC(parse_mathml("<apply><sin/></apply>"), Errc::structural);
  EXPECT_ERRC(parse_mathml("<foo:apply xmlns:foo=\"urn:other\"><plus/></foo:apply>"), Errc::unsupported_element);
}

TEST(SerializeMathml, Leaves) {
  EXPECT_EQ(serialize_mathml(integer(7)), "<cn>7</cn>");
  EXPECT_EQ(serialize_mathml(apply(Op::plus, {integer(2), integer(2)})), "<apply><plus/><cn>2</cn><cn>2</cn></apply>");
}

TEST(SerializeMathml, ListingsRoundTrip) {
  for (const char* name : {"mathml/addition.xml", "mathml/formula.xml", "mathml/mass_sum.xml", "mathml/mass_sum_uri.xml"}) {
    const Expr e = parse_mathml(read_fixture(name));
    EXPECT_EQ(parse_mathml(serialize_mathml(e)), e) << name;
    const WriteOptions prefixed{"m", true};
    EXPECT_EQ(parse_mathml(serialize_mathml(e, prefixed)), e) << name;
  }
}

namespace {

Expr random_expr(std::mt19937& rng, int depth, std::vector<std::string>& bound) {
  const auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  if (depth == 0 || pick(4) == 0) {
    switch (pick(4)) {
      case 0: return integer(pick(200) - 100);
      case 1: {
        std::uniform_real_distribution<double> d(-1e6, 1e6);
        return number(d(rng));
      }
      case 2:
        if (!bound.empty()) return ident(bound[rng() % bound.size()]);
        [[fallthrough]];
      default: return ident("v" + std::to_string(pick(3)));
    }
  }
  static const Op unary[] = {Op::sin, Op::cos, Op::tan, Op::arccos, Op::exp, Op::ln, Op::abs, Op::logical_not};
  static const Op binary[] = {Op::minus, Op::divide, Op::power, Op::eq, Op::lt, Op::gt, Op::leq, Op::geq};
  static const Op nary[] = {Op::plus, Op::times, Op::min, Op::max, Op::logical_and, Op::logical_or};
  switch (pick(6)) {
    case 0: return apply(unary[pick(8)], {random_expr(rng, depth - 1, bound)});
    case 1: return apply(binary[pick(8)], {random_expr(rng, depth - 1, bound), random_expr(rng, depth - 1, bound)});
    case 2: {
      std::vector<Expr> args;
      for (int i = 0, n = 1 + pick(4); i < n; ++i) args.push_back(random_expr(rng, depth - 1, bound));
      return apply(nary[pick(6)], std::move(args));
    }
    case 3: {
      Symbol s{"f" + std::to_string(pick(3)), pick(2) ? "urn:fn#f" : "", ""};
      return apply(s, {random_expr(rng, depth - 1, bound)});
    }
    case 4: {
      Expr r = apply(Op::root, {random_expr(rng, depth - 1, bound)});
      if (pick(2)) std::get<Apply>(r.node).degree.push_back(integer(3));
      return r;
    }
    default: {
      const std::string var = "b" + std::to_string(depth);
      Expr domain = random_expr(rng, depth - 1, bound);
      bound.push_back(var);
      Expr body = random_expr(rng, depth - 1, bound);
      bound.pop_back();
      return quantified(pick(2) ? Quantifier::sum : Quantifier::product, var, std::move(domain), std::move(body));
    }
  }
}

}  // namespace

TEST(SerializeMathml, RandomTreesRoundTrip) {
  std::mt19937 rng(2024);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> bound;
    const Expr e = random_expr(rng, 5, bound);
    const std::string text = serialize_mathml(e);
    EXPECT_EQ(parse_mathml(text), e) << text;
  }
}

TEST(FreeIdentifiers, ExcludesBoundVariables) {
  const Expr e = parse_mathml(read_fixture("mathml/mass_sum.xml"));
  EXPECT_EQ(free_identifiers(e), std::vector<std::string>{"atoms"});
  const Expr f = parse_mathml(read_fixture("mathml/formula.xml"));
  auto ids = free_identifiers(f);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"c", "x"}));
}

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 18.015}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(18.015), "18.015");
}
