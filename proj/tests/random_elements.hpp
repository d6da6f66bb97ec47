// Seeded generators of small random polynomials and rational functions.
#pragma once

#include <random>
#include <vector>

#include "dfield/exact.hpp"

namespace dfield::testing {

inline Rat small_rat(std::mt19937_64& rng, int lim = 5) {
  std::uniform_int_distribution<int> n(-lim, lim), d(1, 3);
  return make_rat(n(rng), d(rng));
}

inline MPoly random_poly(std::mt19937_64& rng, const std::vector<VarId>& vars, int max_terms = 3,
                         int max_deg = 2) {
  std::uniform_int_distribution<int> nterms(1, max_terms), e(0, max_deg),
      pick(0, static_cast<int>(vars.size()) - 1);
  std::vector<MPoly::Term> ts;
  int k = nterms(rng);
  for (int i = 0; i < k; ++i) {
    std::vector<std::pair<VarId, int>> f;
    int nv = e(rng);
    for (int j = 0; j < nv; ++j) f.emplace_back(vars[static_cast<size_t>(pick(rng))], 1);
    ts.emplace_back(Monomial(f), small_rat(rng));
  }
  return MPoly::from_terms(ts);
}

inline MPoly random_nonzero_poly(std::mt19937_64& rng, const std::vector<VarId>& vars) {
  for (;;) {
    MPoly p = random_poly(rng, vars);
    if (!p.is_zero()) return p;
  }
}

inline RatFunc random_ratfunc(std::mt19937_64& rng, const std::vector<VarId>& vars) {
  return RatFunc::normalize(random_poly(rng, vars), random_nonzero_poly(rng, vars));
}

}  // namespace dfield::testing
