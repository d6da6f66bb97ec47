// Additive characters on fixed elements: partial tables, their extension and
// consistency, rational hyperplanes, and the obstruction instances built from
// them.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfield/systems.hpp"

namespace dfield {

struct CharacterEntry {
  Element element;
  CircleValue value;
};

struct CharacterTable {
  Presentation presentation;
  std::vector<CharacterEntry> entries;
};

// An integer relation among the listed elements whose angle sum is not 0 mod 1.
struct Obstruction {
  std::vector<Element> elements;
  std::vector<Int> relation;
  Rat angle_sum;  // in (0, 1)
  std::string str(const Presentation& p) const;
};

// nullopt when consistent.
std::optional<Obstruction> find_inconsistency(const std::vector<CharacterEntry>& entries);

struct CharacterQuery {
  Element element;
  std::optional<CircleValue> desired;  // empty: value freely
};

struct QueryOutcome {
  enum class Kind { Assigned, Forced, Constrained, Free };
  Kind kind = Kind::Free;
  CircleValue value;   // the value entered into the table
  Int choices = 1;     // Constrained: number of admissible values
};

struct Extended {
  CharacterTable table;
  std::vector<QueryOutcome> outcomes;
};
using ExtendResult = std::variant<Extended, Obstruction>;

// Queries are processed in order.  A query without a desired value gets its
// forced value, the least admissible value when finitely many are admissible,
// or 0 when it lies outside the Q-span of the table.
ExtendResult extend_character(const CharacterTable& t, const std::vector<CharacterQuery>& queries);
// Value of x determined by t, if unique.
std::optional<CircleValue> forced_value(const CharacterTable& t, const Element& x);

struct ProductVerdict {
  bool holds = false;
  Rat angle_sum;
  std::vector<std::string> justification;
};
// Throws std::invalid_argument("insufficient table") when some b or c is not
// determined; returns the table's own obstruction when it is inconsistent.
std::variant<ProductVerdict, Obstruction> product_condition(const CharacterTable& t, const SystemModel& m,
                                                            const AdditiveEquation& eq, const Decomposition& dec);

struct HyperplaneWitness {
  std::vector<long> z;
  Element b;
};
// Integer z, |z_i| <= height, first nonzero entry positive, with
// sum z_i x_i in the Q-span of `subfield_span`.
std::optional<HyperplaneWitness> hyperplane_search(const std::vector<Element>& x, int height,
                                                   const std::vector<Element>& subfield_span);

struct ThreeAmalgInstance {
  Presentation presentation;  // p with alpha1..alpha3
  CharacterTable table;
  bool solvable = false;
  std::optional<Obstruction> obstruction;
};
// Requires a certificate for T[a] over p that replays against `registry`.
ThreeAmalgInstance build_3amalg_obstruction(const Presentation& p, const Element& a, const AvoidedRegistry* registry,
                                            const Certificate* certificate, const CircleValue& r12,
                                            const CircleValue& r13, const CircleValue& r23);

struct Refused {
  std::string reason;
  std::optional<Decomposition> combination;
  std::vector<Element> span;
  std::vector<Rat> coefficients;  // b_k = sum coefficients_i span_i when set
};
struct FailingInstance {
  int k = 0;
  std::vector<CharacterTable> facet_tables;  // index i-1: characters on corner w^_i
  Obstruction obstruction;                   // of the union of the facet tables
};
std::variant<FailingInstance, Refused> build_failing_instance(const SystemModel& m, const AdditiveEquation& eq, int k,
                                                              const SearchBounds& b);

// b~ = sum summands = sum rewrite, each piece in its facet, wp(x_i) = rewrite_i.
ValidationReport check_n_sas_witness(const SystemModel& m, const Element& btilde, const std::vector<Element>& summands,
                                     const std::vector<Element>& rewrite, const std::vector<Element>& witnesses);

}  // namespace dfield
