#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compdoc/dictionary.hpp"
#include "compdoc/quantity.hpp"
#include "compdoc/xml.hpp"

namespace compdoc::chem {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(Vec3 a, Vec3 b);
Vec3 cross(Vec3 a, Vec3 b);
double norm(Vec3 a);

struct ElementInfo {
  std::string symbol;
  int number = 0;
  double mass = 0;  // u
};

/// Standard atomic weights compiled in from data/elements.csv.
const std::vector<ElementInfo>& element_table();
const std::string& element_table_version();
/// Throws unknown_element.
const ElementInfo& element(std::string_view symbol);

struct Atom {
  std::string id;
  std::string element;
  std::string atom_type;
  Vec3 position;  // angstrom
  std::optional<double> partial_charge;
  std::optional<int> formal_charge;
  std::vector<xml::Attribute> extra;  // attributes not interpreted here

  /// Partial charge if given, else formal charge, else 0 (elementary charges).
  double charge() const;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  std::array<std::string, 2> atom_refs;
  std::vector<xml::Attribute> extra;

  friend bool operator==(const Bond&, const Bond&) = default;
};

/// A dimensioned scalar attached to a molecule, kept in the units written.
struct Property {
  std::string dict_ref;
  double value = 0;
  std::string units;
  std::vector<xml::Attribute> extra;         // on cml:property
  std::vector<xml::Attribute> scalar_extra;  // on cml:scalar

  friend bool operator==(const Property&, const Property&) = default;
};

struct Molecule {
  std::string id;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<Property> properties;
  std::vector<xml::Attribute> extra;
  /// Child elements that are not atomArray/bondArray/property, kept verbatim.
  std::vector<std::shared_ptr<const xml::Element>> annotations;

  /// Throws unknown_atom.
  std::size_t index_of(std::string_view atom_id) const;
  const Atom& atom(std::string_view atom_id) const { return atoms[index_of(atom_id)]; }

  /// Neighbour indices per atom, each list sorted by atom id.
  std::vector<std::vector<std::size_t>> adjacency() const;

  /// x, y, z of every atom in atom order.
  std::vector<double> coordinates() const;
  /// Functional update: same molecule, new coordinates.
  Molecule with_coordinates(std::span<const double> xyz) const;

  friend bool operator==(const Molecule& a, const Molecule& b);
};

/// Checks id uniqueness, known elements, finite positions and bond references.
void validate(const Molecule& m);

Molecule from_element(const xml::Element& molecule);
Molecule parse_cml(std::string_view xml_text);

struct CmlWriteOptions {
  std::string prefix = "cml";
  bool declare_namespace = true;
};
std::unique_ptr<xml::Element> to_element(const Molecule& m, const CmlWriteOptions& options = {});
std::string serialize_cml(const Molecule& m);

/// Property value converted to canonical units.
Scalar property_value(const Property& p, const DictionarySet& dicts);

Scalar distance(const Molecule& m, std::string_view a, std::string_view b);
Scalar angle(const Molecule& m, std::string_view a, std::string_view b, std::string_view c);
Scalar dihedral(const Molecule& m, std::string_view a, std::string_view b, std::string_view c, std::string_view d);

// Index-based forms used by the forcefield and bindings.
double distance(const Molecule& m, std::size_t a, std::size_t b);
double angle(const Molecule& m, std::size_t a, std::size_t b, std::size_t c);
double dihedral(const Molecule& m, std::size_t a, std::size_t b, std::size_t c, std::size_t d);

Scalar atom_mass(const Atom& a);
Scalar molecular_mass(const Molecule& m);

/// Atom indices. Pairs and ends are ordered by atom id; every list is sorted
/// lexicographically by the ids of its members.
struct InteractionSets {
  std::vector<std::array<std::size_t, 2>> bonds;
  std::vector<std::array<std::size_t, 3>> angles;     // middle atom is the vertex
  std::vector<std::array<std::size_t, 4>> dihedrals;  // four distinct atoms
  struct Pair {
    std::array<std::size_t, 2> atoms;
    bool is14 = false;
    friend bool operator==(const Pair&, const Pair&) = default;
  };
  std::vector<Pair> nonbonded;  // 1-2 and 1-3 pairs excluded
};

InteractionSets interaction_sets(const Molecule& m);

}  // namespace compdoc::chem
