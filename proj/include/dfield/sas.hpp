// Twisted sigma-Artin-Schreier equations sigma(x) - e1*x = e2 and
// multiplicative equations sigma(x) = e^z*x: bounded ansatz search, a decision
// procedure over free bases, algebraic-closure descent, and certificates
// built from leading-coefficient reductions over affine extensions.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfield/difference.hpp"

namespace dfield {

struct TwistedSAS {
  Element e1, e2;  // sigma(x) - e1*x = e2
};

struct MultiplicativeSAS {
  Element e;
  long z = 1;  // sigma(x) = e^z * x, nonzero solutions
};

// Exponents z = c0 + c1*d over integers d > lower (every d when lower is
// empty), or every nonzero integer.
struct ExponentSet {
  enum class Kind { AllNonzero, Affine };
  Kind kind = Kind::AllNonzero;
  long c0 = 0, c1 = 0;
  std::optional<long> lower;
  static ExponentSet all_nonzero() { return {}; }
  static ExponentSet affine(long c0, long c1, std::optional<long> lower) {
    return {Kind::Affine, c0, c1, lower};
  }
  bool contains_zero() const;
  std::string str() const;
  friend bool operator==(const ExponentSet&, const ExponentSet&) = default;
};

// sigma(x) = e^z * x for every z in the set.
struct MultiplicativeFamily {
  Element e;
  ExponentSet zs;
};

using SasEquation = std::variant<TwistedSAS, MultiplicativeSAS, MultiplicativeFamily>;

std::string equation_str(const Presentation& p, const SasEquation& eq, const std::string& unknown = "x");
bool same_equation(const SasEquation& a, const SasEquation& b);
// Exact residual check.
bool satisfies(const Presentation& p, const SasEquation& eq, const Element& x);

struct SearchBounds {
  int degree = 6;       // total degree of ansatz numerator and denominator
  int window = 4;       // |shift| of free-generator variables
  int den_factors = 2;  // factors from the denominator pool per candidate
};

// One derivation step; steps form a tree rooted at index 0.
struct CertStep {
  std::string rule;  // registry | extremal-shift | constant-case | leading-coefficient | degree-bound
  std::string field;
  std::string equation;
  std::string detail;
  std::vector<std::string> derived;
  std::vector<int> children;
  friend bool operator==(const CertStep&, const CertStep&) = default;
};

struct Certificate {
  std::vector<CertStep> steps;
  // Every derived equation in step order.
  std::vector<std::string> derived_equations() const;
  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Solution {
  Element x;
};
struct NoSolutionWithinBounds {
  SearchBounds bounds;
  long candidates = 0;  // denominators tried
};
struct Unsolvable {
  Certificate certificate;
};
using SolveResult = std::variant<Solution, NoSolutionWithinBounds, Unsolvable>;

// ---- bounded search ------------------------------------------------------------

// The ansatz space x = N/D: N ranges over Q-combinations of `monomials`, D over
// `denominators` (tried in order).
struct AnsatzSpace {
  std::vector<VarId> vars;
  std::vector<Monomial> monomials;  // ascending grlex
  std::vector<MPoly> denominators;  // 1 first
};
AnsatzSpace ansatz_space(const Presentation& p, const std::vector<Element>& coefficients, const SearchBounds& b);

// Q-linear conditions on the numerator coefficients for a fixed denominator:
// sigma(N)*D - e1*N*sigma(D) = e2*D*sigma(D), one polynomial per ansatz monomial.
struct CoefficientSystem {
  std::vector<MPoly> columns;
  MPoly rhs;
};
CoefficientSystem coefficient_system(const Presentation& p, const Element& e1, const Element& e2,
                                     const MPoly& denominator, const std::vector<Monomial>& monomials);
// Coefficients c with sum c_j columns_j = rhs, or nullopt.
std::optional<RatVec> solve_columns(const CoefficientSystem& sys);
// A nonzero c with sum c_j columns_j = 0, or nullopt.
std::optional<RatVec> column_dependency(const CoefficientSystem& sys);
// Basis of every c with sum c_j columns_j = 0 (rhs ignored).
std::vector<RatVec> column_kernel(const CoefficientSystem& sys);

SolveResult solve_twisted_bounded(const Presentation& p, const TwistedSAS& eq, const SearchBounds& b = {});
SolveResult solve_multiplicative_bounded(const Presentation& p, const MultiplicativeSAS& eq,
                                         const SearchBounds& b = {});

// ---- free base -----------------------------------------------------------------

struct Solvable {
  Element witness;
};
struct Undecided {
  std::string reason;
};
using Decision = std::variant<Solvable, Unsolvable, Undecided>;

// Requires p.all_free().  Undecided only when the extremal-shift window is
// nonempty and the residual search within `residual` finds nothing.
Decision decide_free_base(const Presentation& p, const SasEquation& eq, const SearchBounds& residual = {});

// ---- descent -------------------------------------------------------------------

class DescentViolated : public std::runtime_error {
 public:
  DescentViolated() : std::runtime_error("descent hypothesis violated") {}
};

// c = (c1..cn) of a minimal polynomial of a solution of sigma(x) - e1 x = e2.
Element descent_linear(const Presentation& p, const std::vector<Element>& c, const Element& e1, const Element& e2);
// Returns c_k (first nonzero) solving sigma(x) = e^{z k} x.
Element descent_multiplicative(const Presentation& p, const std::vector<Element>& c, const Element& e, long z);

// ---- reduction over an affine extension ----------------------------------------

struct Reduction {
  enum class Kind { Equation, Contradiction };
  Kind kind = Kind::Contradiction;
  SasEquation derived;  // in the unknown y = e_n / f_m, over the field without `gen`
  std::string top_identity;
};

// Substitutes b = (sum e_i a^i)/(sum f_j a^j) with symbolic base unknowns,
// clears denominators and reads off the top coefficient in a.
Reduction reduce_over_affine_extension(const Presentation& p, int gen, const SasEquation& eq, int n, int m);
// Same with explicit base coefficients; throws "not in normal position" when
// the leading ones vanish.
Reduction reduce_with_ansatz(const Presentation& p, int gen, const SasEquation& eq,
                             const std::vector<Element>& num_coeffs, const std::vector<Element>& den_coeffs);

// ---- certification -------------------------------------------------------------

struct RegistryEntry {
  std::string name;
  SasEquation equation;
  Certificate certificate;
};

// Families certified unsolvable over `presentation` (and so over every
// sub-presentation).
struct AvoidedRegistry {
  Presentation presentation;
  Element base;  // e with the families sigma(x)/x = e^z
  std::vector<RegistryEntry> entries;
  const RegistryEntry* lookup(const Presentation& field, const SasEquation& eq) const;
};

struct Unknown {
  std::string reason;
};
using CertifyResult = std::variant<Certificate, Unknown>;

CertifyResult certify_unsolvable(const Presentation& p, const SasEquation& eq, const AvoidedRegistry* registry);
// Re-derives every step from the inputs and compares bit-exactly.
bool replay_certificate(const Presentation& p, const SasEquation& eq, const AvoidedRegistry* registry,
                        const Certificate& cert, std::string* diagnostic = nullptr);

std::string field_str(const Presentation& p);

}  // namespace dfield
