#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "compdoc/chem.hpp"
#include "compdoc/evaluate.hpp"
#include "compdoc/forcefield.hpp"

// Decorated chemistry objects and the functions formulae can call on them.
namespace compdoc::domain {

inline constexpr std::string_view kChemUri = "urn:compdoc:chem#";
inline constexpr std::string_view kForcefieldUri = "urn:compdoc:ff#";

using MoleculePtr = std::shared_ptr<const chem::Molecule>;
using ForcefieldPtr = std::shared_ptr<const ff::ForcefieldParams>;

class MoleculeObject final : public DomainObject {
 public:
  explicit MoleculeObject(MoleculePtr m) : molecule(std::move(m)) {}
  std::string_view kind() const override { return "molecule"; }
  std::string label() const override { return "molecule " + molecule->id; }

  MoleculePtr molecule;
};

class AtomObject final : public DomainObject {
 public:
  AtomObject(MoleculePtr m, std::size_t i) : molecule(std::move(m)), index(i) {}
  std::string_view kind() const override { return "atom"; }
  std::string label() const override { return "atom " + atom().id; }
  const chem::Atom& atom() const { return molecule->atoms[index]; }

  MoleculePtr molecule;
  std::size_t index;
};

/// A bond, angle, dihedral or nonbonded pair: atom indices in canonical order.
class InteractionObject final : public DomainObject {
 public:
  InteractionObject(std::string kind, MoleculePtr m, std::vector<std::size_t> atoms, bool is14 = false)
      : kind_(std::move(kind)), molecule(std::move(m)), atoms(std::move(atoms)), is14(is14) {}
  std::string_view kind() const override { return kind_; }
  std::string label() const override;
  std::vector<std::string> types() const;

 private:
  std::string kind_;

 public:
  MoleculePtr molecule;
  std::vector<std::size_t> atoms;
  bool is14 = false;
};

class TorsionObject final : public DomainObject {
 public:
  explicit TorsionObject(ff::TorsionTerm t) : term(t) {}
  std::string_view kind() const override { return "torsion"; }
  std::string label() const override;

  ff::TorsionTerm term;
};

/// The sets a formula iterates over for one molecule, each in canonical order.
struct MoleculeSets {
  Value molecule;
  Value atoms;
  Value bonds;
  Value angles;
  Value dihedrals;
  Value pairs;
};

MoleculeSets molecule_sets(MoleculePtr m);

/// Binds molecule, atoms, bonds, angles, dihedrals and pairs.
Context bind_molecule(const Context& ctx, MoleculePtr m);

/// getMass, getCharge, getLength, getDistance, getAngle, getDihedral,
/// firstAtom, secondAtom; each under its bare name and under kChemUri.
Context register_chem_functions(const Context& ctx);

/// ff:k, ff:r0 (bond); ff:ktheta, ff:theta0 (angle); ff:torsions (dihedral,
/// a sequence of torsion terms); ff:vn, ff:n, ff:gamma (torsion); ff:A, ff:B,
/// ff:scale14vdw, ff:scale14elec (pair). The pair scales are 1 for pairs that
/// are not 1-4. Registered as "ff:<term>" and under kForcefieldUri.
Context register_forcefield_functions(const Context& ctx, ForcefieldPtr params);

/// A global forcefield constant (ff:ke, ff:epsilon, ff:scale14vdw,
/// ff:scale14elec) as a scalar in its dictionary unit.
Value forcefield_constant(const ff::ForcefieldParams& params, std::string_view dict_ref);

/// Everything the standard energy forms need for one molecule: the chemistry
/// and forcefield functions, the molecule's sets, and `ke` and `epsilon`.
Context energy_context(MoleculePtr m, ForcefieldPtr params, const Context& base = Context());

/// A scalar whose dimension comes from resolving `unit` in the built-in dictionaries.
Scalar quantity(double value, std::string_view unit);
ValueType quantity_type(std::string_view unit);

}  // namespace compdoc::domain
