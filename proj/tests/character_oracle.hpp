// Random character-extension instances and a brute-force consistency oracle
// that enumerates integer relations in a box using the construction matrix.
#pragma once

#include <random>
#include <vector>

#include "dfield/amalgamation.hpp"
#include "planted.hpp"

namespace dfield::testing {

struct CharacterInstance {
  CharacterTable table;
  std::vector<CharacterQuery> queries;
  std::vector<std::vector<int>> coords;  // element i = sum coords[i][j] * u_j
  std::vector<Rat> angles;              // entries then queries
};

inline CharacterInstance random_character_instance(const SystemModel& basis_model, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 4), count(1, 5), coef(-1, 1), twelfth(0, 11);
  int r = dim(rng), n = count(rng);
  Element t = basis_model.full.gen("t");
  std::vector<Element> u;
  for (int j = 1; j <= r; ++j) u.push_back(basis_model.full.gen("s" + std::to_string(j)) - t);
  CharacterInstance inst;
  inst.table.presentation = basis_model.full;
  int entries = std::uniform_int_distribution<int>(0, n)(rng);
  for (int i = 0; i < n; ++i) {
    std::vector<int> c(static_cast<size_t>(r));
    Element e;
    for (int j = 0; j < r; ++j) {
      c[static_cast<size_t>(j)] = coef(rng);
      e += u[static_cast<size_t>(j)] * Element(c[static_cast<size_t>(j)]);
    }
    Rat a = make_rat(twelfth(rng), 12);
    inst.coords.push_back(c);
    inst.angles.push_back(a);
    if (i < entries)
      inst.table.entries.push_back({e, CircleValue(a)});
    else
      inst.queries.push_back({e, CircleValue(a)});
  }
  return inst;
}

// Consistent iff every integer relation with entries in [-box, box] has an
// integral angle sum.
inline bool brute_force_consistent(const CharacterInstance& inst, int box = 4) {
  size_t n = inst.coords.size(), r = inst.coords.empty() ? 0 : inst.coords[0].size();
  std::vector<int> z(n, -box);
  for (;;) {
    bool relation = true;
    for (size_t j = 0; j < r && relation; ++j) {
      long s = 0;
      for (size_t i = 0; i < n; ++i) s += static_cast<long>(z[i]) * inst.coords[i][j];
      relation = s == 0;
    }
    if (relation) {
      Rat s = 0;
      for (size_t i = 0; i < n; ++i) s += Rat(z[i]) * inst.angles[i];
      if (s.get_den() != 1) return false;
    }
    size_t k = 0;
    while (k < n && ++z[k] > box) z[k++] = -box;
    if (k == n) return true;
  }
}

}  // namespace dfield::testing
