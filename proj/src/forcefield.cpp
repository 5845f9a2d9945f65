#include "compdoc/forcefield.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <type_traits>

#include "compdoc/error.hpp"

namespace compdoc::ff {

namespace {

std::string join(std::span<const std::string> types) {
  std::string s;
  for (const auto& t : types) s += (s.empty() ? "" : "-") + t;
  return s;
}

template <std::size_t N>
std::array<std::string, N> canonical(std::array<std::string, N> key) {
  std::array<std::string, N> rev;
  std::reverse_copy(key.begin(), key.end(), rev.begin());
  return std::min(key, rev);
}

template <std::size_t N>
std::array<std::string, N> make_key(std::initializer_list<std::string_view> parts) {
  std::array<std::string, N> key;
  std::size_t i = 0;
  for (auto p : parts) key[i++] = std::string(p);
  return key;
}

[[noreturn]] void missing(std::string_view what, std::span<const std::string> types) {
  fail(Errc::missing_parameter, "no " + std::string(what) + " parameters for types " + join(types));
}

void require_nonnegative(double v, std::string_view what, std::span<const std::string> types) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    fail(Errc::invalid_parameter, std::string(what) + " for " + join(types) + " must be a finite non-negative value");
  }
}

template <class Map, class Key, class V>
void insert_unique(Map& map, Key key, V value, std::string_view what) {
  std::string label;
  if constexpr (std::is_same_v<Key, std::string>) {
    label = key;
  } else {
    label = join(key);
  }
  if (!map.emplace(std::move(key), std::move(value)).second) {
    fail(Errc::duplicate_id, "duplicate " + std::string(what) + " entry for " + label);
  }
}

}  // namespace

void ForcefieldParams::add_bond(std::string_view a, std::string_view b, BondParam p) {
  auto key = canonical(make_key<2>({a, b}));
  require_nonnegative(p.k, "bond force constant", key);
  require_nonnegative(p.r0, "equilibrium bond length", key);
  insert_unique(bonds_, std::move(key), p, "bond");
}

void ForcefieldParams::add_angle(std::string_view a, std::string_view b, std::string_view c, AngleParam p) {
  auto key = canonical(make_key<3>({a, b, c}));
  require_nonnegative(p.k, "angle force constant", key);
  insert_unique(angles_, std::move(key), p, "angle");
}

void ForcefieldParams::add_dihedral(std::array<std::string, 4> types, std::vector<TorsionTerm> terms) {
  auto key = canonical(std::move(types));
  if (terms.empty()) fail(Errc::invalid_parameter, "dihedral " + join(key) + " has no Fourier terms");
  for (const auto& t : terms) {
    if (t.n < 1) fail(Errc::invalid_parameter, "dihedral " + join(key) + ": periodicity must be a positive integer");
    if (!std::isfinite(t.vn) || !std::isfinite(t.gamma)) {
      fail(Errc::invalid_parameter, "dihedral " + join(key) + ": non-finite term");
    }
  }
  insert_unique(dihedrals_, std::move(key), std::move(terms), "dihedral");
}

void ForcefieldParams::add_vdw(std::string_view type, VdwParam p) {
  const std::array<std::string, 1> key{std::string(type)};
  require_nonnegative(p.a, "vdW A", key);
  require_nonnegative(p.b, "vdW B", key);
  insert_unique(vdw_, std::string(type), p, "vdW");
}

void ForcefieldParams::add_vdw_pair(std::string_view a, std::string_view b, VdwParam p) {
  auto key = canonical(make_key<2>({a, b}));
  require_nonnegative(p.a, "vdW A", key);
  require_nonnegative(p.b, "vdW B", key);
  insert_unique(vdw_pairs_, std::move(key), p, "vdW pair");
}

// ---------------------------------------------------------------------------
// Lookup

BondParam lookup_bond(const ForcefieldParams& p, std::string_view a, std::string_view b) {
  const auto key = canonical(make_key<2>({a, b}));
  const auto it = p.bonds().find(key);
  if (it == p.bonds().end()) missing("bond", make_key<2>({a, b}));
  return it->second;
}

AngleParam lookup_angle(const ForcefieldParams& p, std::string_view a, std::string_view b, std::string_view c) {
  const auto key = canonical(make_key<3>({a, b, c}));
  const auto it = p.angles().find(key);
  if (it == p.angles().end()) missing("angle", make_key<3>({a, b, c}));
  return it->second;
}

const std::vector<TorsionTerm>& lookup_dihedral(const ForcefieldParams& p, std::string_view a, std::string_view b,
                                                std::string_view c, std::string_view d) {
  const std::string_view x = kWildcard;
  const std::array<std::array<std::string, 4>, 4> patterns{
      make_key<4>({a, b, c, d}), make_key<4>({x, b, c, d}), make_key<4>({a, b, c, x}), make_key<4>({x, b, c, x})};
  for (const auto& pattern : patterns) {
    const auto it = p.dihedrals().find(canonical(pattern));
    if (it != p.dihedrals().end()) return it->second;
  }
  missing("dihedral", patterns[0]);
}

VdwParam lookup_vdw(const ForcefieldParams& p, std::string_view a, std::string_view b) {
  const auto pair = p.vdw_pairs().find(canonical(make_key<2>({a, b})));
  if (pair != p.vdw_pairs().end()) return pair->second;
  const auto ia = p.vdw().find(a);
  const auto ib = p.vdw().find(b);
  if (ia == p.vdw().end() || ib == p.vdw().end()) missing("vdW", make_key<2>({a, b}));
  return {std::sqrt(ia->second.a * ib->second.a), std::sqrt(ia->second.b * ib->second.b)};
}

// ---------------------------------------------------------------------------
// Terms

double bond_energy(double k, double r0, double r) {
  const double d = r - r0;
  return k * (d * d);
}

double angle_energy(double k, double theta0, double theta) {
  const double d = theta - theta0;
  return k * (d * d);
}

double dihedral_energy(std::span<const TorsionTerm> terms, double phi) {
  double e = 0;
  for (const auto& t : terms) e = e + t.vn / 2 * (1 + std::cos(t.n * phi - t.gamma));
  return e;
}

NonbondedEnergy nonbonded_energy(const VdwParam& vdw, double qi, double qj, double r, const ForcefieldParams& p,
                                 bool is14) {
  if (!(r > 0.0)) fail(Errc::degenerate_geometry, "nonbonded pair at zero separation");
  NonbondedEnergy e;
  e.vdw = vdw.a / std::pow(r, 12) - vdw.b / std::pow(r, 6);
  e.elec = p.ke * qi * qj / (p.epsilon * r);
  if (is14) {
    e.vdw = p.scale14_vdw * e.vdw;
    e.elec = p.scale14_elec * e.elec;
  }
  return e;
}

Scalar energy(double kcal_per_mol) {
  static const Unit unit = Unit::parse("kcal.mol^-1");
  static const Dimension dim = DictionarySet::builtin().resolve(unit).dimension;
  return {kcal_per_mol, dim, unit};
}

namespace {

void expect_dimension(const Scalar& s, std::string_view dict_term, std::string_view role) {
  const auto& dicts = DictionarySet::builtin();
  const DictionaryEntry* entry = dicts.find_term(dict_term);
  const ResolvedUnit want = dicts.resolve(entry->unit);
  if (!(s.dimension == want.dimension)) {
    fail(Errc::dimension_mismatch, std::string(role) + " must be " + want.dimension.to_string() + ", got " +
                                       s.dimension.to_string());
  }
}

double in_canonical(const Scalar& s, std::string_view dict_term) {
  const auto& dicts = DictionarySet::builtin();
  const DictionaryEntry* entry = dicts.find_term(dict_term);
  if (s.unit.empty()) return s.value;
  return convert(s, entry->unit.to_string(), dicts).value;
}

}  // namespace

Scalar bond_energy(const Scalar& k, const Scalar& r0, const Scalar& r) {
  expect_dimension(k, "ff:k", "bond force constant");
  expect_dimension(r0, "ff:r0", "equilibrium length");
  expect_dimension(r, "ff:r0", "bond length");
  return energy(bond_energy(in_canonical(k, "ff:k"), in_canonical(r0, "ff:r0"), in_canonical(r, "ff:r0")));
}

Scalar angle_energy(const Scalar& k, const Scalar& theta0, const Scalar& theta) {
  expect_dimension(k, "ff:ktheta", "angle force constant");
  expect_dimension(theta0, "ff:theta0", "equilibrium angle");
  expect_dimension(theta, "ff:theta0", "angle");
  return energy(angle_energy(in_canonical(k, "ff:ktheta"), in_canonical(theta0, "ff:theta0"),
                             in_canonical(theta, "ff:theta0")));
}

// ---------------------------------------------------------------------------
// Whole molecule

namespace {

const std::string& type_of(const chem::Molecule& m, std::size_t i) {
  const auto& a = m.atoms[i];
  if (a.atom_type.empty()) {
    fail(Errc::missing_parameter, "atom '" + a.id + "' in molecule '" + m.id + "' has no atomType");
  }
  return a.atom_type;
}

template <class F>
auto with_context(const chem::Molecule& m, std::string_view kind, std::initializer_list<std::size_t> atoms, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() != Errc::missing_parameter) throw;
    std::string ids;
    for (auto i : atoms) ids += (ids.empty() ? "" : "-") + m.atoms[i].id;
    fail(Errc::missing_parameter, std::string(e.what()) + " (" + std::string(kind) + " " + ids + " of molecule '" +
                                      m.id + "')");
  }
}

}  // namespace

EnergyBreakdown total_energy(const chem::Molecule& m, const ForcefieldParams& p) {
  const auto sets = chem::interaction_sets(m);
  EnergyBreakdown e;
  for (const auto& [i, j] : sets.bonds) {
    const BondParam b = with_context(m, "bond", {i, j}, [&] { return lookup_bond(p, type_of(m, i), type_of(m, j)); });
    e.bond = e.bond + bond_energy(b.k, b.r0, chem::distance(m, i, j));
  }
  for (const auto& [i, j, k] : sets.angles) {
    const AngleParam a = with_context(m, "angle", {i, j, k}, [&] {
      return lookup_angle(p, type_of(m, i), type_of(m, j), type_of(m, k));
    });
    e.angle = e.angle + angle_energy(a.k, a.theta0, chem::angle(m, i, j, k));
  }
  for (const auto& [i, j, k, l] : sets.dihedrals) {
    const auto& terms = with_context(m, "dihedral", {i, j, k, l}, [&]() -> const std::vector<TorsionTerm>& {
      return lookup_dihedral(p, type_of(m, i), type_of(m, j), type_of(m, k), type_of(m, l));
    });
    e.dihedral = e.dihedral + dihedral_energy(terms, chem::dihedral(m, i, j, k, l));
  }
  for (const auto& pair : sets.nonbonded) {
    const auto [i, j] = pair.atoms;
    const VdwParam v = with_context(m, "pair", {i, j}, [&] { return lookup_vdw(p, type_of(m, i), type_of(m, j)); });
    const auto nb = nonbonded_energy(v, m.atoms[i].charge(), m.atoms[j].charge(), chem::distance(m, i, j), p, pair.is14);
    e.vdw = e.vdw + nb.vdw;
    e.electrostatic = e.electrostatic + nb.elec;
  }
  e.total = e.bond + e.angle + e.dihedral + e.vdw + e.electrostatic;
  return e;
}

// ---------------------------------------------------------------------------
// CML

namespace {

std::vector<std::string> split_types(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

class Reader {
 public:
  explicit Reader(const DictionarySet& dicts) : dicts_(dicts) {}

  // Value of `scalar` in the canonical unit of its dictRef term.
  double value(const xml::Element& scalar, const std::string& where) const {
    const auto* ref = scalar.attribute("dictRef");
    if (ref == nullptr) fail(Errc::invalid_parameter, where + ": scalar without dictRef");
    const DictionaryEntry* entry = dicts_.find_term(*ref);
    if (entry == nullptr) fail(Errc::invalid_parameter, where + ": unknown dictRef '" + *ref + "'");
    const std::string text = scalar.text();
    double v = 0;
    const auto b = text.find_first_not_of(" \t\r\n");
    const auto e = text.find_last_not_of(" \t\r\n");
    const char* first = b == std::string::npos ? text.data() : text.data() + b;
    const char* last = b == std::string::npos ? text.data() : text.data() + e + 1;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (first == last || ec != std::errc() || ptr != last || !std::isfinite(v)) {
      fail(Errc::invalid_parameter, where + ": " + *ref + " value '" + text + "' is not a finite number");
    }
    const ResolvedUnit want = dicts_.resolve(entry->unit);
    const auto* units = scalar.attribute("units");
    const Unit unit = units ? Unit::parse(*units) : entry->unit;
    const ResolvedUnit got = dicts_.resolve(unit);
    if (!(got.dimension == want.dimension) || !(got.canonical == want.canonical)) {
      fail(Errc::dimension_mismatch, where + ": " + *ref + " given in " + unit.to_string() + " (" +
                                         got.dimension.to_string() + "), expected " + entry->unit.to_string());
    }
    return dicts_.canonical(v, unit).value;
  }

  struct Fields {
    std::map<std::string, double> values;
    std::string where;

    double get(const std::string& ref) const {
      const auto it = values.find(ref);
      if (it == values.end()) fail(Errc::invalid_parameter, where + ": missing " + ref);
      return it->second;
    }
    double get_or(const std::string& ref, double fallback) const {
      const auto it = values.find(ref);
      return it == values.end() ? fallback : it->second;
    }
  };

  Fields fields(const xml::Element& parent, const std::string& where) const {
    Fields f;
    f.where = where;
    for (const xml::Element* s : parent.child_elements()) {
      if (!s->is(xml::kCMLNamespace, "scalar")) continue;
      const double v = value(*s, where);
      if (!f.values.emplace(*s->attribute("dictRef"), v).second) {
        fail(Errc::invalid_parameter, where + ": " + *s->attribute("dictRef") + " given twice");
      }
    }
    return f;
  }

 private:
  const DictionarySet& dicts_;
};

TorsionTerm torsion(const Reader::Fields& f) {
  const double n = f.get("ff:n");
  if (n != std::trunc(n) || n < 1 || n > 1e6) fail(Errc::invalid_parameter, f.where + ": ff:n must be a positive integer");
  return {f.get("ff:vn"), static_cast<int>(n), f.get_or("ff:gamma", 0.0)};
}

}  // namespace

ForcefieldParams from_element(const xml::Element& root, const DictionarySet& dicts) {
  if (!root.is(xml::kCMLNamespace, "forcefield")) fail(Errc::structural, "expected cml:forcefield, found " + root.name());
  ForcefieldParams p;
  if (const auto* id = root.attribute("id")) p.id = *id;
  const Reader reader(dicts);
  for (const xml::Element* list : root.child_elements()) {
    if (!list->is(xml::kCMLNamespace, "propertyList")) continue;
    const auto* kind = list->attribute("dictRef");
    if (kind == nullptr) fail(Errc::invalid_parameter, "forcefield propertyList without dictRef");
    const auto* types_attr = list->attribute("atomTypes");
    const auto types = split_types(types_attr ? *types_attr : std::string{});
    const std::string where = *kind + (types.empty() ? "" : " " + join(types));
    const auto arity = [&](std::size_t n) {
      if (types.size() != n) {
        fail(Errc::invalid_parameter, where + ": expected " + std::to_string(n) + " atom types");
      }
    };
    const Reader::Fields f = reader.fields(*list, where);
    if (*kind == "ff:global") {
      p.ke = f.get_or("ff:ke", p.ke);
      p.epsilon = f.get_or("ff:epsilon", p.epsilon);
      p.scale14_vdw = f.get_or("ff:scale14vdw", p.scale14_vdw);
      p.scale14_elec = f.get_or("ff:scale14elec", p.scale14_elec);
      if (!(p.epsilon > 0)) fail(Errc::invalid_parameter, "ff:epsilon must be positive");
      if (!(p.scale14_vdw >= 0) || !(p.scale14_elec >= 0)) fail(Errc::invalid_parameter, "1-4 scales must be >= 0");
    } else if (*kind == "ff:bond") {
      arity(2);
      p.add_bond(types[0], types[1], {f.get("ff:k"), f.get("ff:r0")});
    } else if (*kind == "ff:angle") {
      arity(3);
      p.add_angle(types[0], types[1], types[2], {f.get("ff:ktheta"), f.get("ff:theta0")});
    } else if (*kind == "ff:dihedral") {
      arity(4);
      std::vector<TorsionTerm> terms;
      if (!f.values.empty()) terms.push_back(torsion(f));
      for (const xml::Element* term : list->child_elements()) {
        if (term->is(xml::kCMLNamespace, "list")) terms.push_back(torsion(reader.fields(*term, where)));
      }
      p.add_dihedral({types[0], types[1], types[2], types[3]}, std::move(terms));
    } else if (*kind == "ff:vdw") {
      arity(1);
      p.add_vdw(types[0], {f.get("ff:A"), f.get("ff:B")});
    } else if (*kind == "ff:vdwPair") {
      arity(2);
      p.add_vdw_pair(types[0], types[1], {f.get("ff:A"), f.get("ff:B")});
    } else {
      fail(Errc::invalid_parameter, "unknown forcefield section '" + *kind + "'");
    }
  }
  return p;
}

ForcefieldParams parse_forcefield(std::string_view cml_text, const DictionarySet& dicts) {
  if (cml_text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  const auto root = xml::parse(cml_text, "forcefield");
  return from_element(*root, dicts);
}

}  // namespace compdoc::ff
