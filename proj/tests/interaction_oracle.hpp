#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compdoc/chem.hpp"

namespace testing_support {

using Ids2 = std::array<std::string, 2>;
using Ids3 = std::array<std::string, 3>;
using Ids4 = std::array<std::string, 4>;

struct IdSets {
  std::vector<Ids2> bonds;
  std::vector<Ids3> angles;
  std::vector<Ids4> dihedrals;
  std::vector<std::pair<Ids2, bool>> nonbonded;
  friend bool operator==(const IdSets&, const IdSets&) = default;
};

inline IdSets as_ids(const compdoc::chem::Molecule& m, const compdoc::chem::InteractionSets& s) {
  const auto id = [&](std::size_t i) { return m.atoms[i].id; };
  IdSets out;
  for (const auto& b : s.bonds) out.bonds.push_back({id(b[0]), id(b[1])});
  for (const auto& a : s.angles) out.angles.push_back({id(a[0]), id(a[1]), id(a[2])});
  for (const auto& d : s.dihedrals) out.dihedrals.push_back({id(d[0]), id(d[1]), id(d[2]), id(d[3])});
  for (const auto& p : s.nonbonded) out.nonbonded.push_back({{id(p.atoms[0]), id(p.atoms[1])}, p.is14});
  return out;
}

// Enumerates every pair, triple and quadruple of atoms and keeps those the
// bond graph admits.
inline IdSets brute_force(const compdoc::chem::Molecule& m) {
  std::set<std::pair<std::string, std::string>> bonded;
  for (const auto& b : m.bonds) {
    bonded.emplace(b.atom_refs[0], b.atom_refs[1]);
    bonded.emplace(b.atom_refs[1], b.atom_refs[0]);
  }
  const auto B = [&](const std::string& a, const std::string& b) { return bonded.count({a, b}) > 0; };
  std::vector<std::string> ids;
  for (const auto& a : m.atoms) ids.push_back(a.id);
  std::sort(ids.begin(), ids.end());
  IdSets out;
  for (const auto& i : ids) {
    for (const auto& j : ids) {
      if (i < j && B(i, j)) out.bonds.push_back({i, j});
      for (const auto& k : ids) {
        if (i != j && j != k && i < k && B(i, j) && B(j, k)) out.angles.push_back({i, j, k});
        for (const auto& l : ids) {
          const bool distinct = i != j && i != k && i != l && j != k && j != l && k != l;
          if (distinct && i < l && B(i, j) && B(j, k) && B(k, l)) out.dihedrals.push_back({i, j, k, l});
        }
      }
    }
  }
  std::sort(out.angles.begin(), out.angles.end());
  std::sort(out.dihedrals.begin(), out.dihedrals.end());
  for (const auto& i : ids) {
    for (const auto& j : ids) {
      if (!(i < j) || B(i, j)) continue;
      bool one_three = false;
      for (const auto& k : ids) one_three = one_three || (B(i, k) && B(k, j));
      if (one_three) continue;
      bool one_four = false;
      for (const auto& d : out.dihedrals) one_four = one_four || (d[0] == i && d[3] == j);
      out.nonbonded.push_back({{i, j}, one_four});
    }
  }
  return out;
}

}  // namespace testing_support
