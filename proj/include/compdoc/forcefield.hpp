#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compdoc/chem.hpp"
#include "compdoc/dictionary.hpp"
#include "compdoc/quantity.hpp"
#include "compdoc/xml.hpp"

namespace compdoc::ff {

// All parameters are held in canonical units: kcal/mol, angstrom, radian, e.

struct BondParam {
  double k = 0;   // kcal mol^-1 A^-2
  double r0 = 0;  // A
  friend bool operator==(const BondParam&, const BondParam&) = default;
};

struct AngleParam {
  double k = 0;       // kcal mol^-1 rad^-2
  double theta0 = 0;  // rad
  friend bool operator==(const AngleParam&, const AngleParam&) = default;
};

/// One Fourier term (V_n / 2) (1 + cos(n phi - gamma)).
struct TorsionTerm {
  double vn = 0;     // kcal mol^-1
  int n = 1;
  double gamma = 0;  // rad
  friend bool operator==(const TorsionTerm&, const TorsionTerm&) = default;
};

struct VdwParam {
  double a = 0;  // kcal mol^-1 A^12
  double b = 0;  // kcal mol^-1 A^6
  friend bool operator==(const VdwParam&, const VdwParam&) = default;
};

inline constexpr std::string_view kWildcard = "X";

class ForcefieldParams {
 public:
  std::string id;
  double ke = 332.0637;  // kcal A mol^-1 e^-2
  double epsilon = 1.0;
  double scale14_vdw = 1.0;
  double scale14_elec = 1.0;

  // Keys are stored in canonical orientation; adding the same key twice is an error.
  void add_bond(std::string_view a, std::string_view b, BondParam p);
  void add_angle(std::string_view a, std::string_view b, std::string_view c, AngleParam p);
  void add_dihedral(std::array<std::string, 4> types, std::vector<TorsionTerm> terms);
  void add_vdw(std::string_view type, VdwParam p);
  void add_vdw_pair(std::string_view a, std::string_view b, VdwParam p);

  const std::map<std::array<std::string, 2>, BondParam>& bonds() const { return bonds_; }
  const std::map<std::array<std::string, 3>, AngleParam>& angles() const { return angles_; }
  const std::map<std::array<std::string, 4>, std::vector<TorsionTerm>>& dihedrals() const { return dihedrals_; }
  const std::map<std::string, VdwParam, std::less<>>& vdw() const { return vdw_; }
  const std::map<std::array<std::string, 2>, VdwParam>& vdw_pairs() const { return vdw_pairs_; }

  std::size_t size() const {
    return bonds_.size() + angles_.size() + dihedrals_.size() + vdw_.size() + vdw_pairs_.size();
  }

 private:
  std::map<std::array<std::string, 2>, BondParam> bonds_;
  std::map<std::array<std::string, 3>, AngleParam> angles_;
  std::map<std::array<std::string, 4>, std::vector<TorsionTerm>> dihedrals_;
  std::map<std::string, VdwParam, std::less<>> vdw_;
  std::map<std::array<std::string, 2>, VdwParam> vdw_pairs_;
};

/// Reads a `<cml:forcefield>` of `<cml:propertyList dictRef="ff:bond|ff:angle|
/// ff:dihedral|ff:vdw|ff:vdwPair|ff:global" atomTypes="...">` entries. Values
/// are converted to canonical units through `dicts`.
ForcefieldParams from_element(const xml::Element& forcefield, const DictionarySet& dicts = DictionarySet::builtin());
ForcefieldParams parse_forcefield(std::string_view cml_text, const DictionarySet& dicts = DictionarySet::builtin());

// Lookups are symmetric under reversal. Dihedrals prefer an exact match, then
// one wildcard end, then both. Missing entries throw missing_parameter.
BondParam lookup_bond(const ForcefieldParams& p, std::string_view a, std::string_view b);
AngleParam lookup_angle(const ForcefieldParams& p, std::string_view a, std::string_view b, std::string_view c);
const std::vector<TorsionTerm>& lookup_dihedral(const ForcefieldParams& p, std::string_view a, std::string_view b,
                                                std::string_view c, std::string_view d);
/// A direct pair entry, else A_ij = sqrt(A_ii A_jj) and likewise B.
VdwParam lookup_vdw(const ForcefieldParams& p, std::string_view a, std::string_view b);

double bond_energy(double k, double r0, double r);
double angle_energy(double k, double theta0, double theta);
double dihedral_energy(std::span<const TorsionTerm> terms, double phi);

struct NonbondedEnergy {
  double vdw = 0;
  double elec = 0;
};

/// Throws degenerate_geometry for r <= 0. Scales apply only when `is14`.
NonbondedEnergy nonbonded_energy(const VdwParam& vdw, double qi, double qj, double r, const ForcefieldParams& p,
                                 bool is14);

// Dimension-checked forms: arguments carry units, result is kcal/mol.
Scalar bond_energy(const Scalar& k, const Scalar& r0, const Scalar& r);
Scalar angle_energy(const Scalar& k, const Scalar& theta0, const Scalar& theta);

struct EnergyBreakdown {
  double bond = 0;
  double angle = 0;
  double dihedral = 0;
  double vdw = 0;
  double electrostatic = 0;
  double total = 0;
};

/// Sums every term over the molecule's interaction sets in their canonical
/// order, accumulating left to right.
EnergyBreakdown total_energy(const chem::Molecule& m, const ForcefieldParams& p);

/// The energy unit and dimension used for every result.
Scalar energy(double kcal_per_mol);

}  // namespace compdoc::ff
