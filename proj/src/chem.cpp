#include "compdoc/chem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "compdoc/error.hpp"
#include "compdoc/mathml.hpp"
#include "embedded_data.hpp"

namespace compdoc::chem {

double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    fail(Errc::structural, what + ": '" + t + "' is not a number");
  }
  return v;
}

struct Table {
  std::vector<ElementInfo> elements;
  std::string version;
};

const Table& table() {
  static const Table t = [] {
    Table out;
    std::istringstream in{std::string(embedded::element_table())};
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '#') {
        const std::string key = "# table-version:";
        if (line.rfind(key, 0) == 0) out.version = trim(line.substr(key.size()));
        continue;
      }
      if (header) {
        header = false;
        continue;
      }
      std::vector<std::string> cols;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cols.push_back(trim(c));
      if (cols.size() != 3) fail(Errc::structural, "element table: malformed row '" + line + "'");
      out.elements.push_back({cols[0], static_cast<int>(parse_double(cols[1], "element table")),
                              parse_double(cols[2], "element table")});
    }
    return out;
  }();
  return t;
}

Scalar length(double v) { return {v, Dimension::of(Dimension::length), Unit("angstrom")}; }
Scalar radians(double v) { return {v, {}, Unit("radian")}; }

bool is_xmlns(const std::string& name) { return name == "xmlns" || name.rfind("xmlns:", 0) == 0; }

void note_prefix(const xml::Element& source, const std::string& attr, std::map<std::string, std::string>& ns) {
  const auto colon = attr.find(':');
  if (colon == std::string::npos) return;
  const std::string prefix = attr.substr(0, colon);
  if (prefix == "xml") return;
  if (const auto uri = source.lookup_namespace(prefix)) ns.emplace(prefix, *uri);
}

std::vector<xml::Attribute> extras(const xml::Element& e, std::initializer_list<std::string_view> known,
                                   std::map<std::string, std::string>& ns) {
  std::vector<xml::Attribute> out;
  for (const auto& a : e.attributes()) {
    if (is_xmlns(a.name)) continue;
    if (std::find(known.begin(), known.end(), a.name) != known.end()) continue;
    note_prefix(e, a.name, ns);
    out.push_back(a);
  }
  return out;
}

}  // namespace

const std::vector<ElementInfo>& element_table() { return table().elements; }
const std::string& element_table_version() { return table().version; }

const ElementInfo& element(std::string_view symbol) {
  for (const auto& e : table().elements) {
    if (e.symbol == symbol) return e;
  }
  fail(Errc::unknown_element, "unknown element symbol '" + std::string(symbol) + "'");
}

double Atom::charge() const {
  if (partial_charge) return *partial_charge;
  if (formal_charge) return *formal_charge;
  return 0.0;
}

std::size_t Molecule::index_of(std::string_view atom_id) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].id == atom_id) return i;
  }
  fail(Errc::unknown_atom, "molecule '" + id + "' has no atom '" + std::string(atom_id) + "'");
}

std::vector<std::vector<std::size_t>> Molecule::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const auto& b : bonds) {
    const std::size_t i = index_of(b.atom_refs[0]);
    const std::size_t j = index_of(b.atom_refs[1]);
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& n : adj) {
    std::sort(n.begin(), n.end(), [&](std::size_t a, std::size_t b) { return atoms[a].id < atoms[b].id; });
  }
  return adj;
}

std::vector<double> Molecule::coordinates() const {
  std::vector<double> xyz;
  xyz.reserve(atoms.size() * 3);
  for (const auto& a : atoms) {
    xyz.push_back(a.position.x);
    xyz.push_back(a.position.y);
    xyz.push_back(a.position.z);
  }
  return xyz;
}

Molecule Molecule::with_coordinates(std::span<const double> xyz) const {
  if (xyz.size() != atoms.size() * 3) {
    fail(Errc::structural, "coordinate vector of length " + std::to_string(xyz.size()) + " for " +
                               std::to_string(atoms.size()) + " atoms");
  }
  Molecule out = *this;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    out.atoms[i].position = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  }
  return out;
}

bool operator==(const Molecule& a, const Molecule& b) {
  if (a.id != b.id || a.atoms != b.atoms || a.bonds != b.bonds || a.properties != b.properties ||
      a.extra != b.extra || a.annotations.size() != b.annotations.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.annotations.size(); ++i) {
    if (!xml::structurally_equal(*a.annotations[i], *b.annotations[i])) return false;
  }
  return true;
}

void validate(const Molecule& m) {
  std::set<std::string_view> ids;
  for (const auto& a : m.atoms) {
    if (a.id.empty()) fail(Errc::structural, "molecule '" + m.id + "': atom without id");
    if (!ids.insert(a.id).second) fail(Errc::duplicate_id, "molecule '" + m.id + "': duplicate atom id '" + a.id + "'");
    element(a.element);
    if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y) || !std::isfinite(a.position.z)) {
      fail(Errc::missing_coordinates, "atom '" + a.id + "' has non-finite coordinates");
    }
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& b : m.bonds) {
    for (const auto& ref : b.atom_refs) {
      if (!ids.count(ref)) {
        fail(Errc::dangling_reference, "molecule '" + m.id + "': bond refers to missing atom '" + ref + "'");
      }
    }
    if (b.atom_refs[0] == b.atom_refs[1]) {
      fail(Errc::structural, "molecule '" + m.id + "': atom '" + b.atom_refs[0] + "' bonded to itself");
    }
    auto key = std::minmax(b.atom_refs[0], b.atom_refs[1]);
    if (!pairs.emplace(key.first, key.second).second) {
      fail(Errc::structural, "molecule '" + m.id + "': duplicate bond " + key.first + "-" + key.second);
    }
  }
}

// ---------------------------------------------------------------------------
// CML

Molecule from_element(const xml::Element& el) {
  const std::string cml(xml::kCMLNamespace);
  if (!el.is(cml, "molecule")) fail(Errc::structural, "expected cml:molecule, found " + el.name());
  Molecule m;
  std::map<std::string, std::string> ns;
  if (const auto* id = el.attribute("id")) m.id = *id;
  m.extra = extras(el, {"id"}, ns);
  for (const xml::Element* child : el.child_elements()) {
    if (child->is(cml, "atomArray")) {
      for (const xml::Element* ae : child->child_elements()) {
        if (!ae->is(cml, "atom")) continue;
        Atom a;
        if (const auto* v = ae->attribute("id")) a.id = *v;
        const std::string where = "atom '" + a.id + "'";
        if (const auto* v = ae->attribute("elementType")) a.element = *v;
        if (const auto* v = ae->attribute("atomType")) a.atom_type = *v;
        const auto* x = ae->attribute("x3");
        const auto* y = ae->attribute("y3");
        const auto* z = ae->attribute("z3");
        if (!x || !y || !z) fail(Errc::missing_coordinates, where + " lacks x3/y3/z3");
        a.position = {parse_double(*x, where + " x3"), parse_double(*y, where + " y3"), parse_double(*z, where + " z3")};
        if (const auto* v = ae->attribute("partialCharge")) a.partial_charge = parse_double(*v, where + " partialCharge");
        if (const auto* v = ae->attribute("formalCharge")) {
          const double f = parse_double(*v, where + " formalCharge");
          if (f != std::trunc(f)) fail(Errc::structural, where + ": formalCharge must be an integer");
          a.formal_charge = static_cast<int>(f);
        }
        a.extra = extras(*ae, {"id", "elementType", "atomType", "x3", "y3", "z3", "partialCharge", "formalCharge"}, ns);
        m.atoms.push_back(std::move(a));
      }
    } else if (child->is(cml, "bondArray")) {
      for (const xml::Element* be : child->child_elements()) {
        if (!be->is(cml, "bond")) continue;
        const auto* refs = be->attribute("atomRefs2");
        if (refs == nullptr) fail(Errc::structural, "bond without atomRefs2 in molecule '" + m.id + "'");
        std::istringstream in(*refs);
        Bond b;
        std::string extra_token;
        if (!(in >> b.atom_refs[0] >> b.atom_refs[1]) || (in >> extra_token)) {
          fail(Errc::structural, "atomRefs2 '" + *refs + "' must name two atoms");
        }
        b.extra = extras(*be, {"atomRefs2"}, ns);
        m.bonds.push_back(std::move(b));
      }
    } else if (child->is(cml, "property") && child->first_child(cml, "scalar") != nullptr &&
               child->child_elements().size() == 1 && child->has_attribute("dictRef")) {
      const xml::Element* se = child->first_child(cml, "scalar");
      Property p;
      p.dict_ref = *child->attribute("dictRef");
      p.value = parse_double(se->text(), "property '" + p.dict_ref + "'");
      if (const auto* u = se->attribute("units")) p.units = *u;
      p.extra = extras(*child, {"dictRef"}, ns);
      p.scalar_extra = extras(*se, {"units"}, ns);
      m.properties.push_back(std::move(p));
    } else {
      m.annotations.push_back(xml::standalone_copy(*child));
    }
  }
  validate(m);
  for (auto& [prefix, uri] : ns) m.extra.push_back({"xmlns:" + prefix, uri});
  std::stable_partition(m.extra.begin(), m.extra.end(), [](const xml::Attribute& a) { return !is_xmlns(a.name); });
  return m;
}

Molecule parse_cml(std::string_view xml_text) {
  const auto root = xml::parse(xml_text, "cml");
  return from_element(*root);
}

std::unique_ptr<xml::Element> to_element(const Molecule& m, const CmlWriteOptions& options) {
  const std::string p = options.prefix.empty() ? std::string{} : options.prefix + ":";
  auto mol = std::make_unique<xml::Element>(p + "molecule");
  if (options.declare_namespace) {
    mol->set_attribute(options.prefix.empty() ? "xmlns" : "xmlns:" + options.prefix, std::string(xml::kCMLNamespace));
  }
  if (!m.id.empty()) mol->set_attribute("id", m.id);
  for (const auto& a : m.extra) {
    if (is_xmlns(a.name) && !options.declare_namespace) continue;
    if (!mol->has_attribute(a.name)) mol->set_attribute(a.name, a.value);
  }
  auto& atoms = mol->append(std::make_unique<xml::Element>(p + "atomArray"));
  for (const auto& a : m.atoms) {
    auto& ae = atoms.append(std::make_unique<xml::Element>(p + "atom"));
    ae.set_attribute("id", a.id);
    ae.set_attribute("elementType", a.element);
    if (!a.atom_type.empty()) ae.set_attribute("atomType", a.atom_type);
    ae.set_attribute("x3", mathml::format_number(a.position.x));
    ae.set_attribute("y3", mathml::format_number(a.position.y));
    ae.set_attribute("z3", mathml::format_number(a.position.z));
    if (a.partial_charge) ae.set_attribute("partialCharge", mathml::format_number(*a.partial_charge));
    if (a.formal_charge) ae.set_attribute("formalCharge", std::to_string(*a.formal_charge));
    for (const auto& x : a.extra) ae.set_attribute(x.name, x.value);
  }
  if (!m.bonds.empty()) {
    auto& bonds = mol->append(std::make_unique<xml::Element>(p + "bondArray"));
    for (const auto& b : m.bonds) {
      auto& be = bonds.append(std::make_unique<xml::Element>(p + "bond"));
      be.set_attribute("atomRefs2", b.atom_refs[0] + " " + b.atom_refs[1]);
      for (const auto& x : b.extra) be.set_attribute(x.name, x.value);
    }
  }
  for (const auto& prop : m.properties) {
    auto& pe = mol->append(std::make_unique<xml::Element>(p + "property"));
    pe.set_attribute("dictRef", prop.dict_ref);
    for (const auto& x : prop.extra) pe.set_attribute(x.name, x.value);
    auto& se = pe.append(std::make_unique<xml::Element>(p + "scalar"));
    if (!prop.units.empty()) se.set_attribute("units", prop.units);
    for (const auto& x : prop.scalar_extra) se.set_attribute(x.name, x.value);
    se.set_text(mathml::format_number(prop.value));
  }
  for (const auto& ann : m.annotations) mol->append(ann->clone());
  return mol;
}

std::string serialize_cml(const Molecule& m) { return xml::serialize(*to_element(m)); }

Scalar property_value(const Property& p, const DictionarySet& dicts) {
  return dicts.canonical(p.value, Unit::parse(p.units));
}

// ---------------------------------------------------------------------------
// Geometry

double distance(const Molecule& m, std::size_t a, std::size_t b) {
  return norm(m.atoms[a].position - m.atoms[b].position);
}

double angle(const Molecule& m, std::size_t a, std::size_t b, std::size_t c) {
  const Vec3 u = m.atoms[a].position - m.atoms[b].position;
  const Vec3 v = m.atoms[c].position - m.atoms[b].position;
  if (a == b || b == c || a == c || norm(u) == 0.0 || norm(v) == 0.0) {
    fail(Errc::degenerate_geometry, "angle " + m.atoms[a].id + "-" + m.atoms[b].id + "-" + m.atoms[c].id +
                                        " has a zero-length arm");
  }
  return std::atan2(norm(cross(u, v)), dot(u, v));
}

double dihedral(const Molecule& m, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  const auto label = [&] {
    return m.atoms[a].id + "-" + m.atoms[b].id + "-" + m.atoms[c].id + "-" + m.atoms[d].id;
  };
  if (a == b || a == c || a == d || b == c || b == d || c == d) {
    fail(Errc::degenerate_geometry, "dihedral " + label() + " repeats an atom");
  }
  const Vec3 b1 = m.atoms[b].position - m.atoms[a].position;
  const Vec3 b2 = m.atoms[c].position - m.atoms[b].position;
  const Vec3 b3 = m.atoms[d].position - m.atoms[c].position;
  const Vec3 n1 = cross(b1, b2);
  const Vec3 n2 = cross(b2, b3);
  const double l2 = norm(b2);
  constexpr double kCollinear = 1e-10;
  if (l2 == 0.0 || norm(n1) <= kCollinear * norm(b1) * l2 || norm(n2) <= kCollinear * l2 * norm(b3)) {
    fail(Errc::degenerate_geometry, "dihedral " + label() + " has a collinear triple");
  }
  const double phi = std::atan2(l2 * dot(b1, n2), dot(n1, n2));
  return phi == -std::numbers::pi ? std::numbers::pi : phi;
}

Scalar distance(const Molecule& m, std::string_view a, std::string_view b) {
  return length(distance(m, m.index_of(a), m.index_of(b)));
}

Scalar angle(const Molecule& m, std::string_view a, std::string_view b, std::string_view c) {
  return radians(angle(m, m.index_of(a), m.index_of(b), m.index_of(c)));
}

Scalar dihedral(const Molecule& m, std::string_view a, std::string_view b, std::string_view c, std::string_view d) {
  return radians(dihedral(m, m.index_of(a), m.index_of(b), m.index_of(c), m.index_of(d)));
}

Scalar atom_mass(const Atom& a) { return {element(a.element).mass, Dimension::of(Dimension::mass), Unit("u")}; }

Scalar molecular_mass(const Molecule& m) {
  double total = 0;
  for (const auto& a : m.atoms) total += element(a.element).mass;
  return {total, Dimension::of(Dimension::mass), Unit("u")};
}

// ---------------------------------------------------------------------------
// Interaction sets

InteractionSets interaction_sets(const Molecule& m) {
  InteractionSets s;
  const auto adj = m.adjacency();
  const std::size_t n = m.atoms.size();
  const auto less = [&](std::size_t a, std::size_t b) { return m.atoms[a].id < m.atoms[b].id; };
  const auto ids_less = [&](const auto& x, const auto& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), less);
  };
  const auto bonded = [&](std::size_t a, std::size_t b) {
    return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : adj[i]) {
      if (less(i, j)) s.bonds.push_back({i, j});
    }
  }
  std::sort(s.bonds.begin(), s.bonds.end(), ids_less);

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t x = 0; x < adj[j].size(); ++x) {
      for (std::size_t y = x + 1; y < adj[j].size(); ++y) s.angles.push_back({adj[j][x], j, adj[j][y]});
    }
  }
  std::sort(s.angles.begin(), s.angles.end(), ids_less);

  std::set<std::array<std::size_t, 4>> seen;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k : adj[j]) {
      for (std::size_t i : adj[j]) {
        if (i == k) continue;
        for (std::size_t l : adj[k]) {
          if (l == j || l == i) continue;
          std::array<std::size_t, 4> d{i, j, k, l};
          if (less(l, i)) d = {l, k, j, i};
          if (seen.insert(d).second) s.dihedrals.push_back(d);
        }
      }
    }
  }
  std::sort(s.dihedrals.begin(), s.dihedrals.end(), ids_less);

  std::set<std::pair<std::size_t, std::size_t>> ends14;
  for (const auto& d : s.dihedrals) ends14.emplace(std::minmax(d[0], d[3]));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !less(i, j) || bonded(i, j)) continue;
      bool share = false;
      for (std::size_t k : adj[i]) share = share || bonded(k, j);
      if (share) continue;
      s.nonbonded.push_back({{i, j}, ends14.count(std::minmax(i, j)) > 0});
    }
  }
  std::sort(s.nonbonded.begin(), s.nonbonded.end(),
            [&](const auto& x, const auto& y) { return ids_less(x.atoms, y.atoms); });
  return s;
}

}  // namespace compdoc::chem
