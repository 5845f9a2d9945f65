#include "compdoc/evaluate.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace compdoc;
using namespace compdoc::mathml;
using testing_support::read_fixture;

namespace {

struct Particle final : DomainObject {
  std::string name;
  double mass;
  Particle(std::string n, double m) : name(std::move(n)), mass(m) {}
  std::string_view kind() const override { return "particle"; }
  std::string label() const override { return name; }
};

Value particles(std::initializer_list<double> masses) {
  std::vector<Value> out;
  int i = 0;
  for (double m : masses) out.push_back(Value::object(std::make_shared<Particle>("p" + std::to_string(i++), m)));
  return Value::sequence(std::move(out));
}

NativeFunction mass_function() {
  return {{"particle"}, ValueType::scalar(Dimension::of(Dimension::mass), Unit("u")), [](std::span<const Value> args) {
            const auto& p = static_cast<const Particle&>(*args[0].as_object());
            return Value::scalar({p.mass, Dimension::of(Dimension::mass), Unit("u")});
          }};
}

Scalar length(double v) { return {v, Dimension::of(Dimension::length), Unit("angstrom")}; }
Scalar energy(double v) {
  return {v, Dimension::parse("mass length^2 time^-2 amount^-1"), Unit::parse("kcal.mol^-1")};
}

double num(const Value& v) { return v.as_scalar().value; }

}  // namespace

TEST(Eval, AdditionReturnsFour) {
  const Value v = eval(parse_mathml(read_fixture("mathml/addition.xml")), Context());
  EXPECT_EQ(num(v), 4.0);
  EXPECT_TRUE(v.as_scalar().dimension.dimensionless());
}

TEST(Eval, FormulaWithContextReturnsEight) {
  const Context ctx = Context().bind("x", Value::number(2)).bind("c", Value::number(4));
  EXPECT_EQ(num(eval(parse_mathml(read_fixture("mathml/formula.xml")), ctx)), 8.0);
}

TEST(Eval, MassSumOverObjects) {
  const Context ctx = register_function(Context(), "getMass", mass_function()).bind("atoms", particles({1.5, 2.25, 4}));
  const Value v = eval(parse_mathml(read_fixture("mathml/mass_sum.xml")), ctx);
  EXPECT_EQ(num(v), 7.75);
  EXPECT_EQ(v.as_scalar().unit, Unit("u"));
}

TEST(Eval, UriRegistrationMatchesNameForm) {
  const Value set = particles({1.008, 1.008, 15.999});
  const Context by_name = register_function(Context(), "getMass", mass_function()).bind("atoms", set);
  const Context by_uri = register_function(Context(), "http://ex.org/chem#getMass", mass_function()).bind("atoms", set);
  const Value a = eval(parse_mathml(read_fixture("mathml/mass_sum.xml")), by_name);
  const Value b = eval(parse_mathml(read_fixture("mathml/mass_sum_uri.xml")), by_uri);
  EXPECT_EQ(a, b);
}

TEST(Eval, NameMatchPreferredOverUri) {
  NativeFunction one{{}, ValueType::dimensionless(), [](std::span<const Value>) { return Value::number(1); }};
  NativeFunction two{{}, ValueType::dimensionless(), [](std::span<const Value>) { return Value::number(2); }};
  const Context ctx = register_function(register_function(Context(), "f", one), "urn:x#f", two);
  EXPECT_EQ(num(eval(apply(Symbol{"f", "urn:x#f", ""}, {}), ctx)), 1.0);
  EXPECT_EQ(num(eval(apply(Symbol{"g", "urn:x#f", ""}, {}), ctx)), 2.0);
}

TEST(Eval, DuplicateRegistrationRejected) {
  const Context ctx = register_function(Context(), "getMass", mass_function());
  EXPECT_ERRC(register_function(ctx, "getMass", mass_function()), Errc::duplicate_registration);
  EXPECT_ERRC(register_function(ctx, "", mass_function()), Errc::duplicate_registration);
}

TEST(Eval, UnboundIdentifierNamed) {
  EXPECT_ERRC_MSG(eval(parse_mathml(read_fixture("mathml/formula.xml")), Context().bind("x", Value::number(2))),
                  Errc::unbound_identifier, "'c'");
}

TEST(Eval, UnregisteredFunctionNamed) {
  const Expr e = apply(Symbol{"getCharge", "", ""}, {ident("a")});
  EXPECT_ERRC_MSG(eval(e, Context().bind("a", particles({1}).as_sequence()[0])), Errc::unregistered_function,
                  "getCharge");
}

TEST(Eval, DimensionMismatchReportsBoth) {
  const Context ctx = Context().bind("r", Value::scalar(length(1))).bind("e", Value::scalar(energy(2)));
  try {
    eval(apply(Op::plus, {ident("r"), ident("e")}), ctx);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::dimension_mismatch);
    const std::string what = err.what();
    EXPECT_NE(what.find("length"), std::string::npos) << what;
    EXPECT_NE(what.find("mass"), std::string::npos) << what;
  }
  EXPECT_ERRC(eval(apply(Op::lt, {ident("r"), ident("e")}), ctx), Errc::dimension_mismatch);
  EXPECT_ERRC(eval(apply(Op::sin, {ident("r")}), ctx), Errc::dimension_mismatch);
}

TEST(Eval, NumericDomainErrors) {
  EXPECT_ERRC(eval(apply(Op::divide, {integer(1), integer(0)}), Context()), Errc::numeric_domain);
  EXPECT_ERRC(eval(apply(Op::arccos, {number(1.5)}), Context()), Errc::numeric_domain);
  EXPECT_ERRC(eval(apply(Op::ln, {integer(0)}), Context()), Errc::numeric_domain);
  EXPECT_ERRC(eval(apply(Op::root, {integer(-4)}), Context()), Errc::numeric_domain);
}

TEST(Eval, IteratingNonSequenceIsTypeError) {
  const Expr e = quantified(Quantifier::sum, "a", ident("s"), ident("a"));
  EXPECT_ERRC(eval(e, Context().bind("s", Value::number(3))), Errc::type_error);
}

TEST(Eval, EmptySumHasBodyDimension) {
  const Context ctx = register_function(Context(), "getMass", mass_function()).bind("atoms", Value::sequence({}));
  const Value v = eval(parse_mathml(read_fixture("mathml/mass_sum.xml")), ctx);
  EXPECT_EQ(num(v), 0.0);
  EXPECT_EQ(v.as_scalar().dimension, Dimension::of(Dimension::mass));
}

TEST(Eval, EmptyProductIsOne) {
  const Expr e = quantified(Quantifier::product, "a", ident("s"), ident("a"));
  const Value v = eval(e, Context().bind("s", Value::sequence({})));
  EXPECT_EQ(num(v), 1.0);
  EXPECT_TRUE(v.as_scalar().dimension.dimensionless());
}

TEST(Eval, SingleElementSumEqualsBody) {
  const Expr body = apply(Op::times, {ident("a"), number(0.1)});
  const Expr e = quantified(Quantifier::sum, "a", ident("s"), body);
  const Context ctx = Context().bind("s", Value::sequence({Value::number(0.7)}));
  EXPECT_EQ(eval(e, ctx), eval(body, Context().bind("a", Value::number(0.7))));
}

TEST(Eval, BoundVariableShadowsOuterBinding) {
  // a + sum(a in s, a): the first `a` is the outer value.
  const Expr e = apply(Op::plus, {ident("a"), quantified(Quantifier::sum, "a", ident("s"), ident("a"))});
  const Context ctx = Context()
                          .bind("a", Value::number(100))
                          .bind("s", Value::sequence({Value::number(1), Value::number(2)}));
  EXPECT_EQ(num(eval(e, ctx)), 103.0);
  EXPECT_EQ(num(ctx.get("a")), 100.0);
}

TEST(Eval, ContextIsPersistent) {
  const Context parent = Context().bind("x", Value::number(1));
  const Context child = parent.bind("x", Value::number(2)).bind("y", Value::number(3));
  EXPECT_EQ(num(parent.get("x")), 1.0);
  EXPECT_EQ(parent.lookup("y"), nullptr);
  EXPECT_EQ(num(child.get("x")), 2.0);
}

TEST(Eval, ReferentialTransparency) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-10, 10);
  const Expr e = parse_mathml(
      "<apply><plus/><apply><times/><apply><sin/><ci>x</ci></apply><apply><exp/><ci>c</ci></apply></apply>"
      "<apply><power/><ci>x</ci><cn>3</cn></apply></apply>");
  for (int i = 0; i < 100; ++i) {
    const Context ctx = Context().bind("x", Value::number(d(rng))).bind("c", Value::number(d(rng)));
    const double a = num(eval(e, ctx));
    const double b = num(eval(e, ctx));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b));
  }
}

TEST(Eval, DimensionSafetyProperty) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> ex(-2, 2);
  std::uniform_real_distribution<double> val(0.5, 5);
  for (int i = 0; i < 300; ++i) {
    Dimension da, db;
    for (int k = 0; k < Dimension::count; ++k) {
      da.exponents[k] = ex(rng);
      db.exponents[k] = ex(rng);
    }
    const Scalar a{val(rng), da, {}}, b{val(rng), db, {}};
    const Context ctx = Context().bind("a", Value::scalar(a)).bind("b", Value::scalar(b));
    if (!(da == db)) {
      for (Op op : {Op::plus, Op::minus, Op::lt, Op::eq, Op::geq}) {
        EXPECT_ERRC(eval(apply(op, {ident("a"), ident("b")}), ctx), Errc::dimension_mismatch);
      }
    }
    const Value t = eval(apply(Op::times, {ident("a"), ident("b")}), ctx);
    EXPECT_EQ(t.as_scalar().dimension, da * db);
    const Value q = eval(apply(Op::divide, {ident("a"), ident("b")}), ctx);
    EXPECT_EQ(q.as_scalar().dimension, da / db);
  }
}

TEST(Eval, UnitsOnNumbersAreCanonicalised) {
  const Value v = eval(parse_mathml("<cn units=\"degree\">180</cn>"), Context());
  EXPECT_EQ(num(v), std::numbers::pi);
  EXPECT_EQ(num(eval(parse_mathml("<apply><cos/><cn units=\"degree\">180</cn></apply>"), Context())), -1.0);
}

TEST(Eval, EnergyUnitsCancel) {
  const Scalar k{100, Dimension::parse("mass time^-2 amount^-1"), Unit::parse("kcal.mol^-1.angstrom^-2")};
  const Context ctx = Context()
                          .bind("k", Value::scalar(k))
                          .bind("r", Value::scalar(length(1.6)))
                          .bind("r0", Value::scalar(length(1.5)));
  const Expr e = parse_mathml(
      "<apply><times/><ci>k</ci><apply><power/><apply><minus/><ci>r</ci><ci>r0</ci></apply><cn>2</cn></apply></apply>");
  const Scalar s = eval(e, ctx).as_scalar();
  EXPECT_EQ(s.unit, Unit::parse("kcal.mol^-1"));
  EXPECT_EQ(s.dimension, energy(0).dimension);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
}

TEST(Eval, ComparisonAndLogic) {
  EXPECT_TRUE(eval(parse_mathml("<apply><lt/><cn>1</cn><cn>2</cn><cn>3</cn></apply>"), Context()).as_bool());
  EXPECT_FALSE(eval(parse_mathml("<apply><lt/><cn>1</cn><cn>3</cn><cn>2</cn></apply>"), Context()).as_bool());
  EXPECT_TRUE(eval(parse_mathml("<apply><and/><apply><geq/><cn>2</cn><cn>2</cn></apply>"
                                "<apply><not/><apply><eq/><cn>1</cn><cn>2</cn></apply></apply></apply>"),
                   Context())
                  .as_bool());
  EXPECT_EQ(num(eval(parse_mathml("<apply><max/><cn>1</cn><cn>5</cn><cn>3</cn></apply>"), Context())), 5.0);
  EXPECT_EQ(num(eval(parse_mathml("<apply><min/><cn>1</cn><cn>-5</cn></apply>"), Context())), -5.0);
}

TEST(InferType, SumOfFunctionResults) {
  const Context ctx = register_function(Context(), "getMass", mass_function());
  TypeEnv env{{"atoms", ValueType::sequence("particle")}};
  const ValueType t = infer_type(parse_mathml(read_fixture("mathml/mass_sum.xml")), env, ctx);
  EXPECT_EQ(t.kind, ValueType::Kind::scalar);
  EXPECT_EQ(t.dimension, Dimension::of(Dimension::mass));
}

TEST(InferType, DetectsStaticMismatch) {
  TypeEnv env{{"r", ValueType::scalar(Dimension::of(Dimension::length))},
              {"k", ValueType::scalar(energy(0).dimension)}};
  EXPECT_ERRC(infer_type(parse_mathml("<apply><minus/><ci>r</ci><ci>k</ci></apply>"), env, Context()),
              Errc::dimension_mismatch);
}
