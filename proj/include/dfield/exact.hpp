// Exact arithmetic substrate: rationals, sparse multivariate polynomials over
// shift-indexed variables, canonical rational functions and Q-linear algebra.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfield {

using Rat = mpq_class;
using Int = mpz_class;

Rat make_rat(long num, long den = 1);
std::string rat_str(const Rat& q);
Rat parse_rat(const std::string& text);

// sigma^shift applied to generator number `gen` (declaration index).
struct VarId {
  int gen = 0;
  int shift = 0;
  friend bool operator==(const VarId&, const VarId&) = default;
  friend auto operator<=>(const VarId& a, const VarId& b) = default;
};

// Sorted by VarId, exponents positive.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<VarId, int>> factors);
  static Monomial var(VarId v, int e = 1);

  const std::vector<std::pair<VarId, int>>& factors() const { return f_; }
  int degree() const { return deg_; }
  int degree_in(VarId v) const;
  bool is_one() const { return f_.empty(); }

  Monomial operator*(const Monomial& o) const;
  // nullopt if o does not divide *this.
  std::optional<Monomial> divide(const Monomial& o) const;
  Monomial without(VarId v) const;
  Monomial gcd(const Monomial& o) const;

  friend bool operator==(const Monomial& a, const Monomial& b) { return a.f_ == b.f_; }
  // Graded lexicographic order; the earliest VarId is the most significant.
  friend int grlex_cmp(const Monomial& a, const Monomial& b);

 private:
  std::vector<std::pair<VarId, int>> f_;
  int deg_ = 0;
};

struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return grlex_cmp(a, b) < 0; }
};

using VarNamer = std::function<std::string(VarId)>;
std::string default_var_name(VarId v);

class MPoly {
 public:
  using Term = std::pair<Monomial, Rat>;

  MPoly() = default;
  MPoly(const Rat& c);  // NOLINT(google-explicit-constructor)
  static MPoly constant(long c) { return MPoly(Rat(c)); }
  static MPoly var(VarId v, int e = 1);
  static MPoly monomial(const Monomial& m, const Rat& c);
  // Takes arbitrary terms; merges duplicates and drops zeros.
  static MPoly from_terms(std::vector<Term> terms);
  // Trusts the caller: terms already strictly decreasing, no zeros.
  static MPoly from_sorted(std::vector<Term> terms);

  // Terms in strictly decreasing grlex order, no zero coefficients.
  const std::vector<Term>& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  bool is_constant() const { return t_.empty() || (t_.size() == 1 && t_[0].first.is_one()); }
  Rat constant_value() const;  // requires is_constant()
  const Monomial& leading_monomial() const { return t_.front().first; }
  const Rat& leading_coeff() const { return t_.front().second; }
  int total_degree() const;
  int degree_in(VarId v) const;
  std::vector<VarId> variables() const;
  bool mentions(VarId v) const;

  MPoly operator-() const;
  MPoly operator+(const MPoly& o) const;
  MPoly operator-(const MPoly& o) const;
  MPoly operator*(const MPoly& o) const;
  MPoly operator*(const Rat& c) const;
  MPoly& operator+=(const MPoly& o) { return *this = *this + o; }
  MPoly& operator-=(const MPoly& o) { return *this = *this - o; }
  MPoly& operator*=(const MPoly& o) { return *this = *this * o; }
  MPoly pow(unsigned e) const;
  MPoly mul_monomial(const Monomial& m) const;

  // Exact quotient; throws std::domain_error when o does not divide *this.
  MPoly exact_div(const MPoly& o) const;
  std::optional<MPoly> try_div(const MPoly& o) const;

  // Coefficients of v^k, indexed by k.
  std::vector<MPoly> coeffs_in(VarId v) const;
  static MPoly from_coeffs_in(VarId v, const std::vector<MPoly>& cs);

  MPoly rename(const std::function<VarId(VarId)>& f) const;
  MPoly evaluate(const std::map<VarId, Rat>& point) const;

  Monomial monomial_content() const;
  MPoly monic() const;  // divide by leading coefficient

  std::string str(const VarNamer& namer = default_var_name) const;

  friend bool operator==(const MPoly& a, const MPoly& b);
  friend bool operator!=(const MPoly& a, const MPoly& b) { return !(a == b); }

 private:
  std::vector<Term> t_;
};

// Monic (leading coefficient 1) greatest common divisor; gcd(0,0) = 0.
MPoly gcd(const MPoly& a, const MPoly& b);

class PoleHit : public std::runtime_error {
 public:
  PoleHit() : std::runtime_error("pole hit") {}
};

class RatFunc {
 public:
  RatFunc() : num_(), den_(Rat(1)) {}
  RatFunc(const Rat& c) : num_(c), den_(Rat(1)) {}  // NOLINT(google-explicit-constructor)
  RatFunc(long c) : RatFunc(Rat(c)) {}              // NOLINT(google-explicit-constructor)
  RatFunc(const MPoly& p) : num_(p), den_(Rat(1)) {}  // NOLINT(google-explicit-constructor)
  static RatFunc var(VarId v) { return RatFunc(MPoly::var(v)); }

  // Canonical num/den; throws std::domain_error("division by zero") when den = 0.
  static RatFunc normalize(const MPoly& num, const MPoly& den);

  const MPoly& num() const { return num_; }
  const MPoly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  Rat constant_value() const;
  bool is_polynomial() const { return den_.is_constant(); }
  std::vector<VarId> variables() const;
  bool mentions(VarId v) const { return num_.mentions(v) || den_.mentions(v); }

  RatFunc operator-() const;
  RatFunc operator+(const RatFunc& o) const;
  RatFunc operator-(const RatFunc& o) const;
  RatFunc operator*(const RatFunc& o) const;
  RatFunc operator/(const RatFunc& o) const;
  RatFunc& operator+=(const RatFunc& o) { return *this = *this + o; }
  RatFunc& operator-=(const RatFunc& o) { return *this = *this - o; }
  RatFunc& operator*=(const RatFunc& o) { return *this = *this * o; }
  RatFunc inverse() const;
  RatFunc pow(int e) const;

  // Partial substitution by rationals; throws PoleHit when the denominator vanishes.
  RatFunc evaluate(const std::map<VarId, Rat>& point) const;
  // Simultaneous substitution of variables by rational functions.
  RatFunc substitute(const std::map<VarId, RatFunc>& images) const;
  RatFunc rename(const std::function<VarId(VarId)>& f) const;
  // For renamings that preserve the variable order (e.g. a uniform shift):
  // the canonical form carries over without a gcd.
  RatFunc rename_monotone(const std::function<VarId(VarId)>& f) const {
    return RatFunc(num_.rename(f), den_.rename(f), true);
  }

  std::string str(const VarNamer& namer = default_var_name) const;

  friend bool operator==(const RatFunc& a, const RatFunc& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const RatFunc& a, const RatFunc& b) { return !(a == b); }

 private:
  RatFunc(MPoly n, MPoly d, bool) : num_(std::move(n)), den_(std::move(d)) {}
  MPoly num_;
  MPoly den_;
};

// Polynomial substitution helper: P(images) as a pair (numerator, denominator)
// without cancellation.
std::pair<MPoly, MPoly> substitute_poly(const MPoly& p, const std::map<VarId, RatFunc>& images);

// ---- Q-linear algebra ------------------------------------------------------

using RatVec = std::vector<Rat>;

// Sparse row echelon form over Q with incremental insertion.
class SparseEchelon {
 public:
  using Row = std::vector<std::pair<int, Rat>>;  // sorted by column, no zeros
  explicit SparseEchelon(int ncols) : ncols_(ncols) {}
  // Reduces and inserts; returns false if the row became zero.
  bool insert(Row row);
  int rank() const { return static_cast<int>(pivots_.size()); }
  bool has_pivot(int col) const { return pivots_.count(col) != 0; }
  // Row reduced against the current pivots (leading entries eliminated).
  Row reduced(Row row) const {
    reduce(row);
    return row;
  }
  // Full back-substitution; free columns set to zero.  Columns >= limit are
  // treated as right-hand side: returns the values of columns [0, limit)
  // solving sum a_j x_j = -(rhs column) style systems; see solve_sparse.
  const std::map<int, Row>& pivots() const { return pivots_; }
  int ncols() const { return ncols_; }

 private:
  void reduce(Row& row) const;
  int ncols_;
  std::map<int, Row> pivots_;  // pivot column -> row with leading entry 1
};

// Solves A x = b for sparse A given as rows over columns [0, ncols).
// Returns nullopt when inconsistent; otherwise the solution with free
// variables set to zero.
std::optional<RatVec> solve_sparse(int ncols, const std::vector<SparseEchelon::Row>& rows,
                                   const RatVec& rhs);

// Basis of {x : A x = 0} for dense A (rows x cols), canonical RREF basis.
std::vector<RatVec> kernel(const std::vector<RatVec>& a, int ncols);
int rank(std::vector<RatVec> a);

// Tuples q with sum q_i * elements_i = 0.  Each tuple scaled to coprime integers
// with positive first nonzero entry.
std::vector<RatVec> linear_relations(const std::vector<RatFunc>& elements);
// Z-basis of {z in Z^ncols : A z = 0}.
std::vector<std::vector<Int>> integer_kernel(const std::vector<RatVec>& a, int ncols);
// Z-basis of the integer tuples z with sum z_i * elements_i = 0.
std::vector<std::vector<Int>> integer_relations(const std::vector<RatFunc>& elements);

// ---- circle group ----------------------------------------------------------

class CircleValue {
 public:
  CircleValue() = default;
  explicit CircleValue(const Rat& angle);
  const Rat& angle() const { return a_; }
  CircleValue operator+(const CircleValue& o) const { return CircleValue(a_ + o.a_); }
  CircleValue operator-() const { return CircleValue(-a_); }
  CircleValue times(const Int& k) const { return CircleValue(a_ * Rat(k)); }
  bool is_identity() const { return a_ == 0; }
  friend bool operator==(const CircleValue& x, const CircleValue& y) { return x.a_ == y.a_; }
  // Smallest n > 0 with n * angle = 0.
  Int order() const { return a_.get_den(); }

 private:
  Rat a_{0};
};

}  // namespace dfield
