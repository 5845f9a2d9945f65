#pragma once

#include <cmath>
#include <random>

#include "compdoc/chem.hpp"
#include "files.hpp"

namespace testing_support {

inline compdoc::chem::Molecule molecule_fixture(const std::string& name) {
  return compdoc::chem::parse_cml(read_fixture("molecules/" + name + ".cml"));
}

// Uniform random rotation from a unit quaternion, plus a translation.
struct RigidMotion {
  double r[3][3];
  compdoc::chem::Vec3 t;

  static RigidMotion random(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    double q[4];
    double n = 0;
    for (double& c : q) {
      c = g(rng);
      n += c * c;
    }
    n = std::sqrt(n);
    for (double& c : q) c /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    RigidMotion m{{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
                   {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
                   {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}},
                  {}};
    std::uniform_real_distribution<double> u(-10, 10);
    m.t = {u(rng), u(rng), u(rng)};
    return m;
  }

  compdoc::chem::Vec3 apply(compdoc::chem::Vec3 p) const {
    return {r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t.x, r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t.y,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t.z};
  }

  compdoc::chem::Molecule apply(const compdoc::chem::Molecule& m) const {
    compdoc::chem::Molecule out = m;
    for (auto& a : out.atoms) a.position = apply(a.position);
    return out;
  }
};

}  // namespace testing_support
