#include "compdoc/domain.hpp"

#include <cmath>
#include <random>

#include "chem_support.hpp"
#include "support.hpp"

using namespace compdoc;
using namespace compdoc::domain;
using testing_support::molecule_fixture;
using testing_support::read_fixture;
using testing_support::read_sample;
using testing_support::RigidMotion;

namespace {

MoleculePtr shared(const std::string& fixture) {
  return std::make_shared<const chem::Molecule>(molecule_fixture(fixture));
}

ForcefieldPtr basic() {
  static const ForcefieldPtr p =
      std::make_shared<const ff::ForcefieldParams>(ff::parse_forcefield(read_fixture("forcefield/basic.xml")));
  return p;
}

Value eval_form(const std::string& form, const Context& ctx) {
  return eval(mathml::parse_mathml(read_sample("forms/" + form + ".xml")), ctx);
}

bool close(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::max(1.0, std::abs(want));
}

}  // namespace

TEST(DomainChem, WaterMassSum) {
  const Context ctx = bind_molecule(register_chem_functions(Context()), shared("water"));
  const Value v = eval(mathml::parse_mathml(read_fixture("mathml/mass_sum.xml")), ctx);
  // O 15.999 + H 1.008 + H 1.008
  EXPECT_NEAR(v.as_scalar().value, 18.015, 1e-9);
  EXPECT_EQ(v.as_scalar().unit, Unit::parse("u"));
}

TEST(DomainChem, UriFormMatchesNameForm) {
  const Context ctx = bind_molecule(register_chem_functions(Context()), shared("branched6"));
  const auto by_name = eval(mathml::parse_mathml(read_fixture("mathml/mass_sum.xml")), ctx);
  const auto by_uri = eval(mathml::parse_mathml(
                               "<apply><sum/><bvar><ci>a</ci></bvar>"
                               "<condition><apply><in/><ci>a</ci><ci type='set'>atoms</ci></apply></condition>"
                               "<apply><csymbol definitionURL='urn:compdoc:chem#getMass'>mass</csymbol><ci>a</ci>"
                               "</apply></apply>"),
                           ctx);
  EXPECT_EQ(by_name, by_uri);
}

TEST(DomainChem, MoleculeMassMatchesAtomSum) {
  const auto m = shared("ethane");
  const Context ctx = bind_molecule(register_chem_functions(Context()), m);
  const auto whole = eval(mathml::parse_mathml("<apply><csymbol>getMass</csymbol><ci>molecule</ci></apply>"), ctx);
  EXPECT_EQ(whole.as_scalar().value, chem::molecular_mass(*m).value);
}

TEST(DomainChem, GeometryFunctions) {
  const auto m = shared("chain4");
  const Context ctx = bind_molecule(register_chem_functions(Context()), m);
  const auto& bonds = ctx.get("bonds").as_sequence();
  const auto& angles = ctx.get("angles").as_sequence();
  const auto& dihedrals = ctx.get("dihedrals").as_sequence();
  const auto& pairs = ctx.get("pairs").as_sequence();
  ASSERT_EQ(bonds.size(), 3u);
  ASSERT_EQ(angles.size(), 2u);
  ASSERT_EQ(dihedrals.size(), 1u);
  ASSERT_EQ(pairs.size(), 1u);

  const auto call = [&](const std::string& fn, const Value& arg) {
    return ctx.find_function(fn)->body(std::span<const Value>(&arg, 1));
  };
  EXPECT_EQ(call("getLength", bonds[0]).as_scalar().value, chem::distance(*m, 0, 1));
  EXPECT_EQ(call("getLength", bonds[0]).as_scalar().unit, Unit::parse("angstrom"));
  EXPECT_EQ(call("getAngle", angles[1]).as_scalar().value, chem::angle(*m, 1, 2, 3));
  EXPECT_EQ(call("getDihedral", dihedrals[0]).as_scalar().value, chem::dihedral(*m, 0, 1, 2, 3));
  EXPECT_EQ(call("getDistance", pairs[0]).as_scalar().value, chem::distance(*m, 0, 3));
  EXPECT_EQ(call("getCharge", call("secondAtom", pairs[0])).as_scalar().value, -0.15);
  EXPECT_EQ(call("firstAtom", bonds[2]).as_object()->label(), "atom a3");
  EXPECT_EQ(pairs[0].as_object()->label(), "pair a1-a4");
  EXPECT_TRUE(static_cast<const InteractionObject&>(*pairs[0].as_object()).is14);
}

TEST(DomainChem, KindsAreChecked) {
  const Context ctx = bind_molecule(register_chem_functions(Context()), shared("chain4"));
  const auto doc = [](const std::string& fn, const std::string& set) {
    return mathml::parse_mathml("<apply><sum/><bvar><ci>x</ci></bvar><condition><apply><in/><ci>x</ci><ci>" + set +
                                "</ci></apply></condition><apply><csymbol>" + fn +
                                "</csymbol><ci>x</ci></apply></apply>");
  };
  EXPECT_ERRC(eval(doc("getLength", "angles"), ctx), Errc::type_error);
  EXPECT_ERRC(eval(doc("getDistance", "atoms"), ctx), Errc::type_error);
  EXPECT_ERRC(eval(doc("getCharge", "bonds"), ctx), Errc::type_error);
  EXPECT_NO_THROW(eval(doc("getDistance", "bonds"), ctx));
}

// ---------------------------------------------------------------------------
// Single terms: the MathML form against the oracle, bit for bit.

namespace {

Context scalars(const std::vector<std::string>& names, const std::vector<Scalar>& values) {
  Context ctx;
  for (std::size_t i = 0; i < names.size(); ++i) ctx = ctx.bind(names[i], Value::scalar(values[i]));
  return ctx;
}

}  // namespace

TEST(DomainOracle, BondTermBitEqual) {
  const auto e = mathml::parse_mathml(
      "<apply><times/><ci>k</ci><apply><power/><apply><minus/><ci>r</ci><ci>r0</ci></apply><cn>2</cn></apply></apply>");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> k(0, 1000), r(0.5, 3);
  for (int i = 0; i < 1000; ++i) {
    const double kv = k(rng), r0 = r(rng), rv = r(rng);
    const Value got = eval(e, scalars({"k", "r0", "r"}, {quantity(kv, "kcal.mol^-1.angstrom^-2"),
                                                         quantity(r0, "angstrom"), quantity(rv, "angstrom")}));
    ASSERT_EQ(got.as_scalar().value, ff::bond_energy(kv, r0, rv));
    ASSERT_EQ(got.as_scalar().unit, Unit::parse("kcal.mol^-1"));
  }
}

TEST(DomainOracle, AngleTermBitEqual) {
  const auto e = mathml::parse_mathml(
      "<apply><times/><ci>k</ci><apply><power/><apply><minus/><ci>t</ci><ci>t0</ci></apply><cn>2</cn></apply></apply>");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> k(0, 200), t(0, 3.14159);
  for (int i = 0; i < 1000; ++i) {
    const double kv = k(rng), t0 = t(rng), tv = t(rng);
    const Value got = eval(e, scalars({"k", "t0", "t"}, {quantity(kv, "kcal.mol^-1.radian^-2"), quantity(t0, "radian"),
                                                         quantity(tv, "radian")}));
    ASSERT_EQ(got.as_scalar().value, ff::angle_energy(kv, t0, tv));
    ASSERT_EQ(got.as_scalar().unit, Unit::parse("kcal.mol^-1"));
  }
}

TEST(DomainOracle, DihedralTermBitEqual) {
  const auto e = mathml::parse_mathml(
      "<apply><times/><apply><divide/><ci>vn</ci><cn>2</cn></apply>"
      "<apply><plus/><cn>1</cn><apply><cos/><apply><minus/><apply><times/><ci>n</ci><ci>phi</ci></apply>"
      "<ci>gamma</ci></apply></apply></apply></apply>");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(0, 10), a(-3.2, 3.2);
  std::uniform_int_distribution<int> n(1, 6);
  for (int i = 0; i < 1000; ++i) {
    const ff::TorsionTerm term{v(rng), n(rng), a(rng)};
    const double phi = a(rng);
    const Value got = eval(e, scalars({"vn", "n", "gamma", "phi"},
                                      {quantity(term.vn, "kcal.mol^-1"), Scalar{double(term.n), {}, {}},
                                       quantity(term.gamma, "radian"), quantity(phi, "radian")}));
    ASSERT_EQ(got.as_scalar().value, ff::dihedral_energy({&term, 1}, phi));
  }
}

TEST(DomainOracle, NonbondedTermsBitEqual) {
  const auto vdw = mathml::parse_mathml(
      "<apply><times/><ci>s</ci><apply><minus/>"
      "<apply><divide/><ci>A</ci><apply><power/><ci>R</ci><cn>12</cn></apply></apply>"
      "<apply><divide/><ci>B</ci><apply><power/><ci>R</ci><cn>6</cn></apply></apply></apply></apply>");
  const auto elec = mathml::parse_mathml(
      "<apply><times/><ci>s</ci><apply><divide/><apply><times/><ci>ke</ci><ci>qi</ci><ci>qj</ci></apply>"
      "<apply><times/><ci>eps</ci><ci>R</ci></apply></apply></apply>");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0, 2e6), b(0, 2e3), r(0.8, 12), q(-1, 1), s(0, 1), eps(1, 80);
  std::bernoulli_distribution is14(0.3);
  for (int i = 0; i < 1000; ++i) {
    ff::ForcefieldParams p;
    p.scale14_vdw = s(rng);
    p.scale14_elec = s(rng);
    p.epsilon = eps(rng);
    const ff::VdwParam v{a(rng), b(rng)};
    const double qi = q(rng), qj = q(rng), R = r(rng);
    const bool one4 = is14(rng);
    const auto want = ff::nonbonded_energy(v, qi, qj, R, p, one4);
    const Context ctx =
        scalars({"A", "B", "R", "qi", "qj", "ke", "eps"},
                {quantity(v.a, "kcal.mol^-1.angstrom^12"), quantity(v.b, "kcal.mol^-1.angstrom^6"),
                 quantity(R, "angstrom"), quantity(qi, "e"), quantity(qj, "e"),
                 forcefield_constant(p, "ff:ke").as_scalar(), Scalar{p.epsilon, {}, {}}});
    const Scalar sv{one4 ? p.scale14_vdw : 1.0, {}, {}};
    const Scalar se{one4 ? p.scale14_elec : 1.0, {}, {}};
    const Value got_vdw = eval(vdw, ctx.bind("s", Value::scalar(sv)));
    const Value got_elec = eval(elec, ctx.bind("s", Value::scalar(se)));
    ASSERT_EQ(got_vdw.as_scalar().value, want.vdw);
    ASSERT_EQ(got_elec.as_scalar().value, want.elec);
    ASSERT_EQ(got_vdw.as_scalar().unit, Unit::parse("kcal.mol^-1"));
    ASSERT_EQ(got_elec.as_scalar().unit, Unit::parse("kcal.mol^-1"));
  }
}

// ---------------------------------------------------------------------------
// Whole molecules: the form files against total_energy.

TEST(DomainOracle, MoleculeFormsMatchOracle) {
  for (const char* name : {"diatomic", "chain4", "branched6", "ethane", "water"}) {
    SCOPED_TRACE(name);
    const auto m = shared(name);
    const Context ctx = energy_context(m, basic());
    const auto want = ff::total_energy(*m, *basic());
    const std::pair<const char*, double> parts[] = {{"bond", want.bond},       {"angle", want.angle},
                                                    {"dihedral", want.dihedral}, {"vdw", want.vdw},
                                                    {"elec", want.electrostatic}, {"total", want.total}};
    for (const auto& [form, expected] : parts) {
      const Value v = eval_form(form, ctx);
      EXPECT_TRUE(close(v.as_scalar().value, expected, 1e-9)) << form << ": " << v.as_scalar().value << " vs " << expected;
      EXPECT_EQ(v.as_scalar().dimension, ff::energy(0).dimension) << form;
    }
  }
}

TEST(DomainOracle, FormsInferEnergyDimension) {
  const Context ctx = energy_context(shared("chain4"), basic());
  for (const char* form : {"bond", "angle", "dihedral", "vdw", "elec", "total"}) {
    const auto t = infer_type(mathml::parse_mathml(read_sample(std::string("forms/") + form + ".xml")), ctx);
    EXPECT_EQ(t.kind, ValueType::Kind::scalar) << form;
    EXPECT_EQ(t.dimension, ff::energy(0).dimension) << form;
  }
}

TEST(DomainOracle, RigidMotionInvariance) {
  std::mt19937_64 rng(9);
  for (const char* name : {"chain4", "branched6"}) {
    const auto m = shared(name);
    const double e0 = eval_form("total", energy_context(m, basic())).as_scalar().value;
    for (int i = 0; i < 10; ++i) {
      const auto moved = std::make_shared<const chem::Molecule>(RigidMotion::random(rng).apply(*m));
      EXPECT_NEAR(eval_form("total", energy_context(moved, basic())).as_scalar().value, e0, 1e-9) << name;
    }
  }
}

TEST(DomainOracle, MissingParameterSurfaces) {
  auto m = molecule_fixture("chain4");
  m.atoms[3].atom_type = "ZZ";
  const Context ctx = energy_context(std::make_shared<const chem::Molecule>(m), basic());
  EXPECT_ERRC_MSG(eval_form("bond", ctx), Errc::missing_parameter, "bond a3-a4");
  EXPECT_ERRC(eval_form("total", ctx), Errc::missing_parameter);
}

TEST(DomainOracle, ConstantsCarryUnits) {
  const auto ke = forcefield_constant(*basic(), "ff:ke").as_scalar();
  EXPECT_EQ(ke.value, 332.0637);
  EXPECT_EQ(ke.unit, Unit::parse("kcal.mol^-1.angstrom.e^-2"));
  EXPECT_EQ(forcefield_constant(*basic(), "ff:scale14vdw").as_scalar().value, 0.5);
  EXPECT_ERRC(forcefield_constant(*basic(), "ff:nothing"), Errc::missing_parameter);
}
