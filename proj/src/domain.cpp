#include "compdoc/domain.hpp"

#include <map>
#include <mutex>

#include "compdoc/error.hpp"
#include "compdoc/mathml.hpp"

namespace compdoc::domain {

namespace {

const ResolvedUnit& resolved(std::string_view unit) {
  static std::mutex mu;
  static std::map<std::string, ResolvedUnit, std::less<>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(unit);
  if (it == cache.end()) {
    it = cache.emplace(std::string(unit), DictionarySet::builtin().resolve(Unit::parse(unit))).first;
  }
  return it->second;
}

template <class T>
const T& object_arg(const Value& v) {
  return static_cast<const T&>(*v.as_object());
}

Context with_both(const Context& ctx, std::string_view uri_base, const std::string& name, const std::string& uri_term,
                  const NativeFunction& fn) {
  return ctx.with_function(name, fn).with_function(std::string(uri_base) + uri_term, fn);
}

}  // namespace

Scalar quantity(double value, std::string_view unit) {
  return {value, resolved(unit).dimension, Unit::parse(unit)};
}

ValueType quantity_type(std::string_view unit) { return ValueType::scalar(resolved(unit).dimension, Unit::parse(unit)); }

std::string InteractionObject::label() const {
  std::string s = kind_ + " ";
  for (std::size_t i = 0; i < atoms.size(); ++i) s += (i ? "-" : "") + molecule->atoms[atoms[i]].id;
  return s;
}

std::vector<std::string> InteractionObject::types() const {
  std::vector<std::string> out;
  for (auto i : atoms) {
    const auto& a = molecule->atoms[i];
    if (a.atom_type.empty()) {
      fail(Errc::missing_parameter, "atom '" + a.id + "' in molecule '" + molecule->id + "' has no atomType");
    }
    out.push_back(a.atom_type);
  }
  return out;
}

std::string TorsionObject::label() const {
  return "torsion vn=" + mathml::format_number(term.vn) + " n=" + std::to_string(term.n) +
         " gamma=" + mathml::format_number(term.gamma);
}

MoleculeSets molecule_sets(MoleculePtr m) {
  const auto sets = chem::interaction_sets(*m);
  MoleculeSets out;
  out.molecule = Value::object(std::make_shared<MoleculeObject>(m));
  std::vector<Value> atoms;
  for (std::size_t i = 0; i < m->atoms.size(); ++i) atoms.push_back(Value::object(std::make_shared<AtomObject>(m, i)));
  out.atoms = Value::sequence(std::move(atoms));
  const auto wrap = [&](const char* kind, const auto& list) {
    std::vector<Value> items;
    for (const auto& t : list) {
      items.push_back(Value::object(
          std::make_shared<InteractionObject>(kind, m, std::vector<std::size_t>(t.begin(), t.end()))));
    }
    return Value::sequence(std::move(items));
  };
  out.bonds = wrap("bond", sets.bonds);
  out.angles = wrap("angle", sets.angles);
  out.dihedrals = wrap("dihedral", sets.dihedrals);
  std::vector<Value> pairs;
  for (const auto& p : sets.nonbonded) {
    pairs.push_back(Value::object(std::make_shared<InteractionObject>(
        "pair", m, std::vector<std::size_t>{p.atoms[0], p.atoms[1]}, p.is14)));
  }
  out.pairs = Value::sequence(std::move(pairs));
  return out;
}

Context bind_molecule(const Context& ctx, MoleculePtr m) {
  MoleculeSets s = molecule_sets(std::move(m));
  return ctx.bind("molecule", std::move(s.molecule))
      .bind("atoms", std::move(s.atoms))
      .bind("bonds", std::move(s.bonds))
      .bind("angles", std::move(s.angles))
      .bind("dihedrals", std::move(s.dihedrals))
      .bind("pairs", std::move(s.pairs));
}

Context register_chem_functions(const Context& ctx) {
  Context out = ctx;
  const auto add = [&](const std::string& name, NativeFunction fn) { out = with_both(out, kChemUri, name, name, fn); };

  add("getMass", {{"any"}, quantity_type("u"), [](std::span<const Value> a) {
                    const auto& obj = a[0].as_object();
                    if (obj && obj->kind() == "atom") {
                      const auto& atom = object_arg<AtomObject>(a[0]);
                      return Value::scalar(quantity(chem::element(atom.atom().element).mass, "u"));
                    }
                    if (obj && obj->kind() == "molecule") {
                      return Value::scalar(chem::molecular_mass(*object_arg<MoleculeObject>(a[0]).molecule));
                    }
                    fail(Errc::type_error, "getMass expects an atom or molecule, got " + a[0].describe());
                  }});
  add("getCharge", {{"atom"}, quantity_type("e"), [](std::span<const Value> a) {
                      return Value::scalar(quantity(object_arg<AtomObject>(a[0]).atom().charge(), "e"));
                    }});
  const auto two_atoms = [](const Value& v, const char* fn) -> const InteractionObject& {
    const auto& obj = v.as_object();
    if (!obj || (obj->kind() != "bond" && obj->kind() != "pair")) {
      fail(Errc::type_error, std::string(fn) + " expects a bond or pair, got " + v.describe());
    }
    return object_arg<InteractionObject>(v);
  };
  add("getLength", {{"bond"}, quantity_type("angstrom"), [](std::span<const Value> a) {
                      const auto& b = object_arg<InteractionObject>(a[0]);
                      return Value::scalar(quantity(chem::distance(*b.molecule, b.atoms[0], b.atoms[1]), "angstrom"));
                    }});
  add("getDistance", {{"any"}, quantity_type("angstrom"), [two_atoms](std::span<const Value> a) {
                        const auto& b = two_atoms(a[0], "getDistance");
                        return Value::scalar(
                            quantity(chem::distance(*b.molecule, b.atoms[0], b.atoms[1]), "angstrom"));
                      }});
  add("getAngle", {{"angle"}, quantity_type("radian"), [](std::span<const Value> a) {
                     const auto& t = object_arg<InteractionObject>(a[0]);
                     return Value::scalar(quantity(chem::angle(*t.molecule, t.atoms[0], t.atoms[1], t.atoms[2]), "radian"));
                   }});
  add("getDihedral", {{"dihedral"}, quantity_type("radian"), [](std::span<const Value> a) {
                        const auto& t = object_arg<InteractionObject>(a[0]);
                        return Value::scalar(quantity(
                            chem::dihedral(*t.molecule, t.atoms[0], t.atoms[1], t.atoms[2], t.atoms[3]), "radian"));
                      }});
  for (std::size_t which : {0u, 1u}) {
    const std::string name = which == 0 ? "firstAtom" : "secondAtom";
    add(name, {{"any"}, ValueType::object("atom"), [two_atoms, which, name](std::span<const Value> a) {
                 const auto& b = two_atoms(a[0], name.c_str());
                 return Value::object(std::make_shared<AtomObject>(b.molecule, b.atoms[which]));
               }});
  }
  return out;
}

Context register_forcefield_functions(const Context& ctx, ForcefieldPtr params) {
  Context out = ctx;
  const auto add = [&](const std::string& term, NativeFunction fn) {
    out = with_both(out, kForcefieldUri, "ff:" + term, term, fn);
  };
  const auto types = [](const Value& v) { return object_arg<InteractionObject>(v).types(); };
  // Wraps a lookup so a missing parameter names the interaction as well as the types.
  const auto located = [](const Value& v, auto&& f) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.code() != Errc::missing_parameter) throw;
      const auto& obj = object_arg<InteractionObject>(v);
      fail(Errc::missing_parameter,
           std::string(e.what()) + " (" + obj.label() + " of molecule '" + obj.molecule->id + "')");
    }
  };

  const auto bond = [=](const Value& v) {
    return located(v, [&] {
      const auto t = types(v);
      return ff::lookup_bond(*params, t[0], t[1]);
    });
  };
  const auto angle = [=](const Value& v) {
    return located(v, [&] {
      const auto t = types(v);
      return ff::lookup_angle(*params, t[0], t[1], t[2]);
    });
  };
  const auto vdw = [=](const Value& v) {
    return located(v, [&] {
      const auto t = types(v);
      return ff::lookup_vdw(*params, t[0], t[1]);
    });
  };

  add("k", {{"bond"}, quantity_type("kcal.mol^-1.angstrom^-2"), [=](std::span<const Value> a) {
              return Value::scalar(quantity(bond(a[0]).k, "kcal.mol^-1.angstrom^-2"));
            }});
  add("r0", {{"bond"}, quantity_type("angstrom"), [=](std::span<const Value> a) {
               return Value::scalar(quantity(bond(a[0]).r0, "angstrom"));
             }});
  add("ktheta", {{"angle"}, quantity_type("kcal.mol^-1.radian^-2"), [=](std::span<const Value> a) {
                   return Value::scalar(quantity(angle(a[0]).k, "kcal.mol^-1.radian^-2"));
                 }});
  add("theta0", {{"angle"}, quantity_type("radian"), [=](std::span<const Value> a) {
                   return Value::scalar(quantity(angle(a[0]).theta0, "radian"));
                 }});
  add("torsions", {{"dihedral"}, ValueType::sequence("torsion"), [=](std::span<const Value> a) {
                     const auto& terms = located(a[0], [&]() -> const std::vector<ff::TorsionTerm>& {
                       const auto t = types(a[0]);
                       return ff::lookup_dihedral(*params, t[0], t[1], t[2], t[3]);
                     });
                     std::vector<Value> items;
                     for (const auto& term : terms) items.push_back(Value::object(std::make_shared<TorsionObject>(term)));
                     return Value::sequence(std::move(items));
                   }});
  add("vn", {{"torsion"}, quantity_type("kcal.mol^-1"), [](std::span<const Value> a) {
               return Value::scalar(quantity(object_arg<TorsionObject>(a[0]).term.vn, "kcal.mol^-1"));
             }});
  add("n", {{"torsion"}, ValueType::dimensionless(), [](std::span<const Value> a) {
              return Value::number(object_arg<TorsionObject>(a[0]).term.n);
            }});
  add("gamma", {{"torsion"}, quantity_type("radian"), [](std::span<const Value> a) {
                  return Value::scalar(quantity(object_arg<TorsionObject>(a[0]).term.gamma, "radian"));
                }});
  add("A", {{"pair"}, quantity_type("kcal.mol^-1.angstrom^12"), [=](std::span<const Value> a) {
              return Value::scalar(quantity(vdw(a[0]).a, "kcal.mol^-1.angstrom^12"));
            }});
  add("B", {{"pair"}, quantity_type("kcal.mol^-1.angstrom^6"), [=](std::span<const Value> a) {
              return Value::scalar(quantity(vdw(a[0]).b, "kcal.mol^-1.angstrom^6"));
            }});
  add("scale14vdw", {{"pair"}, ValueType::dimensionless(), [=](std::span<const Value> a) {
                       return Value::number(object_arg<InteractionObject>(a[0]).is14 ? params->scale14_vdw : 1.0);
                     }});
  add("scale14elec", {{"pair"}, ValueType::dimensionless(), [=](std::span<const Value> a) {
                        return Value::number(object_arg<InteractionObject>(a[0]).is14 ? params->scale14_elec : 1.0);
                      }});
  return out;
}

Value forcefield_constant(const ff::ForcefieldParams& params, std::string_view dict_ref) {
  if (dict_ref == "ff:ke") return Value::scalar(quantity(params.ke, "kcal.mol^-1.angstrom.e^-2"));
  if (dict_ref == "ff:epsilon") return Value::number(params.epsilon);
  if (dict_ref == "ff:scale14vdw") return Value::number(params.scale14_vdw);
  if (dict_ref == "ff:scale14elec") return Value::number(params.scale14_elec);
  fail(Errc::missing_parameter, "no forcefield constant '" + std::string(dict_ref) + "'");
}

Context energy_context(MoleculePtr m, ForcefieldPtr params, const Context& base) {
  const Value ke = forcefield_constant(*params, "ff:ke");
  const Value epsilon = forcefield_constant(*params, "ff:epsilon");
  return bind_molecule(register_forcefield_functions(register_chem_functions(base), std::move(params)), std::move(m))
      .bind("ke", ke)
      .bind("epsilon", epsilon);
}

}  // namespace compdoc::domain
