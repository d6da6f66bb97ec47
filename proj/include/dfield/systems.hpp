// Independent n-systems realized by disjoint generator blocks over a base,
// additive equations on their facets, and decompositions into antisymmetric
// families over the pairwise corners.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dfield/sas.hpp"

namespace dfield {

// Subsets of {1..n} as bit masks, bit i-1 standing for index i.
using IndexSet = std::uint32_t;
inline IndexSet index_bit(int i) { return IndexSet(1) << (i - 1); }
inline IndexSet full_set(int n) { return (IndexSet(1) << n) - 1; }
// {1..n} minus the given indices.
IndexSet hat(int n, std::initializer_list<int> drop);
std::string index_set_str(IndexSet w);

struct BlockGenerator {
  std::string name;
  GeneratorSpec::Kind kind = GeneratorSpec::Kind::Free;
  Element alpha, beta;  // over the base, affine kind only
  static BlockGenerator free(std::string name) { return {std::move(name), GeneratorSpec::Kind::Free, {}, {}}; }
  static BlockGenerator affine(std::string name, Element alpha, Element beta) {
    return {std::move(name), GeneratorSpec::Kind::Affine, std::move(alpha), std::move(beta)};
  }
};
using BlockSpec = std::vector<BlockGenerator>;

class SystemError : public std::invalid_argument {
 public:
  explicit SystemError(const std::vector<std::string>& diagnostics);
  std::vector<std::string> diagnostics;
};

// Every generator carries a label: the base has label {} and block i has {i}.
// Attached generators (affine over the corner of their label) may carry
// larger labels.  corner(w) consists of the generators whose label lies in w.
struct SystemModel {
  Presentation full;
  int n = 0;
  std::map<int, IndexSet> labels;  // generator id -> label

  IndexSet label(int id) const;
  std::vector<int> block(int i) const;  // ids labelled exactly {i}
  std::set<int> corner_ids(IndexSet w) const;
  Presentation corner(IndexSet w) const;
  bool in_corner(const Element& x, IndexSet w) const;
  // Smallest w with x in corner(w).
  IndexSet support(const Element& x) const;
  std::vector<std::string> validate() const;
};

SystemModel build_system(const Presentation& base, const std::vector<BlockSpec>& blocks);
// Adjoins sigma(x) = alpha*x + beta with alpha, beta in corner(w), labelled w.
int attach_generator(SystemModel& m, const std::string& name, IndexSet w, const Element& alpha, const Element& beta);
// Size n-1 over base corner({i}); corner(w) of the result is corner(w + {i})
// of the original after re-indexing the remaining blocks in order.
SystemModel restrict_over_corner(const SystemModel& m, int i);

// summands[i-1] is b_{w^_i}.
struct AdditiveEquation {
  std::vector<Element> summands;
  int height() const { return static_cast<int>(summands.size()); }
};
std::vector<std::string> validate_equation(const SystemModel& m, const AdditiveEquation& eq);
bool is_ff(const SystemModel& m, const AdditiveEquation& eq);

// (i, j) -> c^j_{w^_i}, 1-based, i != j.
struct Decomposition {
  std::map<std::pair<int, int>, Element> c;
  const Element& at(int i, int j) const { return c.at({i, j}); }
  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> diagnostics;
};
ValidationReport validate_decomposition(const SystemModel& m, const AdditiveEquation& eq, const Decomposition& dec);

// Seeded pole-avoiding point source for generic evaluation.  Attempt k draws
// integers from [-(4+4k), 4+4k].
class GenericPoints {
 public:
  explicit GenericPoints(std::uint64_t seed = 1, int budget = 32) : rng_(seed), budget_(budget) {}
  int budget() const { return budget_; }
  Rat draw(int attempt);

 private:
  std::mt19937_64 rng_;
  int budget_;
};

// d[j] = d^j_{w^_i} (index 0 and i unused).
std::map<int, Element> specialise_step1(const SystemModel& m, const AdditiveEquation& eq, int i, GenericPoints& pts);
// Heights >= 2.  Throws std::logic_error when a correction term leaves the base.
Decomposition decompose(const SystemModel& m, const AdditiveEquation& eq, GenericPoints& pts);

// x in corner(w) with sigma(x) - x = target, or nullopt.
using TorsorWitnessOracle = std::function<std::optional<Element>(const Element& target, IndexSet w)>;

class WitnessUnavailable : public std::runtime_error {
 public:
  WitnessUnavailable(Element target, IndexSet corner, const std::string& shown);
  Element target;
  IndexSet corner;
};

struct WpSystem {
  Decomposition e;          // (i,k) -> e^k_{w^_i}
  Decomposition witnesses;  // (i,k) -> f with wp(f) = e^k_{w^_i}, antisymmetric
};
// d[i-1] = d_{w^_i} with fixed sum.
WpSystem wp_decompose_with_witnesses(const SystemModel& m, const std::vector<Element>& d,
                                     const TorsorWitnessOracle& oracle, GenericPoints& pts);
// Every c^j_{w^_i} fixed; throws WitnessUnavailable when the oracle declines.
Decomposition ff_decompose_with_witnesses(const SystemModel& m, const AdditiveEquation& eq,
                                          const TorsorWitnessOracle& oracle, GenericPoints& pts);

// Oracle answering from a bounded twisted search over each corner.
TorsorWitnessOracle bounded_search_oracle(const SystemModel& m, const SearchBounds& b);

struct NotFoundWithinBounds {
  SearchBounds bounds;
  std::map<std::pair<int, int>, int> span_sizes;  // (i<j) -> fixed elements found
};
using FfSearchResult = std::variant<Decomposition, NotFoundWithinBounds>;

// Fixed elements N/D of p within bounds: N over the ansatz monomials, D over
// the ansatz denominators built from `hints`.  The second form works on corner(w).
std::vector<Element> fixed_elements(const Presentation& p, const SearchBounds& b,
                                    const std::vector<Element>& hints = {});
std::vector<Element> fixed_spanning_set(const SystemModel& m, IndexSet w, const SearchBounds& b,
                                        const std::vector<Element>& hints = {});
FfSearchResult ff_decompose_bounded(const SystemModel& m, const AdditiveEquation& eq, const SearchBounds& b);

}  // namespace dfield
