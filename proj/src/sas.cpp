#include "dfield/sas.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dfield {

namespace {

bool is_token(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '[' || c == ']' || c == '_' || c == '\'';
  });
}

std::string paren(const std::string& s) { return is_token(s) ? s : "(" + s + ")"; }

std::string power_str(const std::string& base, const std::string& exp) {
  if (exp == "1") return base;
  return paren(base) + "^" + paren(exp);
}

// d stands for n - m, the degree difference of the ansatz.
std::string affine_exp(long c0, long c1) {
  if (c1 == 0) return std::to_string(c0);
  if (c0 == 0) {
    if (c1 == 1) return "n-m";
    if (c1 == -1) return "m-n";
    return std::to_string(c1) + "*(n-m)";
  }
  long a = c1 < 0 ? -c1 : c1;
  return std::to_string(c0) + (c1 > 0 ? "+" : "-") + (a == 1 ? "" : std::to_string(a) + "*") + "(n-m)";
}

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

}  // namespace

bool ExponentSet::contains_zero() const {
  if (kind == Kind::AllNonzero) return false;
  if (c1 == 0) return c0 == 0;
  if (c0 % c1 != 0) return false;
  long d0 = -c0 / c1;
  return !lower || d0 > *lower;
}

std::string ExponentSet::str() const {
  if (kind == Kind::AllNonzero) return "z";
  return affine_exp(c0, c1);
}

std::string equation_str(const Presentation& p, const SasEquation& eq, const std::string& u) {
  return std::visit(overloaded{
                        [&](const TwistedSAS& t) {
                          std::string lhs = "s(" + u + ") - ";
                          if (t.e1 == RatFunc(1)) lhs += u;
                          else lhs += paren(p.str(t.e1)) + "*" + u;
                          return lhs + " = " + p.str(t.e2);
                        },
                        [&](const MultiplicativeSAS& m) {
                          return "s(" + u + ")/" + u + " = " + power_str(p.str(m.e), std::to_string(m.z));
                        },
                        [&](const MultiplicativeFamily& f) {
                          std::string s = "s(" + u + ")/" + u + " = " + power_str(p.str(f.e), f.zs.str());
                          if (f.zs.kind == ExponentSet::Kind::AllNonzero) return s + ", z != 0";
                          if (f.zs.c1 != 0 && f.zs.lower) s += ", n-m > " + std::to_string(*f.zs.lower);
                          else if (f.zs.c1 != 0) s += ", n-m any integer";
                          return s;
                        },
                    },
                    eq);
}

bool same_equation(const SasEquation& a, const SasEquation& b) {
  if (a.index() != b.index()) return false;
  if (auto* t = std::get_if<TwistedSAS>(&a)) {
    const auto& u = std::get<TwistedSAS>(b);
    return t->e1 == u.e1 && t->e2 == u.e2;
  }
  if (auto* m = std::get_if<MultiplicativeSAS>(&a)) {
    const auto& n = std::get<MultiplicativeSAS>(b);
    return m->e == n.e && m->z == n.z;
  }
  const auto& f = std::get<MultiplicativeFamily>(a);
  const auto& g = std::get<MultiplicativeFamily>(b);
  return f.e == g.e && f.zs == g.zs;
}

bool satisfies(const Presentation& p, const SasEquation& eq, const Element& x) {
  if (auto* t = std::get_if<TwistedSAS>(&eq)) return p.sigma(x) - t->e1 * x == t->e2;
  if (auto* m = std::get_if<MultiplicativeSAS>(&eq))
    return !x.is_zero() && p.sigma(x) == m->e.pow(static_cast<int>(m->z)) * x;
  return false;
}

std::string field_str(const Presentation& p) {
  std::string s = "Q(";
  bool first = true;
  for (const auto& g : p.generators()) {
    if (!first) s += ",";
    s += g.name;
    first = false;
  }
  return first ? "Q" : s + ")";
}

std::vector<std::string> Certificate::derived_equations() const {
  std::vector<std::string> out;
  for (const auto& s : steps) out.insert(out.end(), s.derived.begin(), s.derived.end());
  return out;
}

// ---- bounded search ------------------------------------------------------------

namespace {

std::vector<Monomial> monomials_upto(const std::vector<VarId>& vars, int degree) {
  std::vector<Monomial> out;
  std::vector<std::pair<VarId, int>> cur;
  std::function<void(size_t, int)> rec = [&](size_t i, int left) {
    if (i == vars.size()) {
      out.emplace_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      if (e > 0) cur.emplace_back(vars[i], e);
      rec(i + 1, left - e);
      if (e > 0) cur.pop_back();
    }
  };
  rec(0, degree);
  std::sort(out.begin(), out.end(), MonomialLess{});
  return out;
}

void add_pool_sources(const MPoly& s, std::vector<MPoly>& sources) {
  if (s.is_constant()) return;
  Monomial c = s.monomial_content();
  for (const auto& [v, e] : c.factors()) sources.push_back(MPoly::var(v));
  MPoly rest = s.exact_div(MPoly::monomial(c, Rat(1)));
  if (!rest.is_constant()) sources.push_back(rest.monic());
}

bool within(const MPoly& q, const std::set<VarId>& vars) {
  for (VarId v : q.variables())
    if (!vars.count(v)) return false;
  return true;
}

std::vector<MPoly> denominator_candidates(const Presentation& p, const std::vector<Element>& coeffs,
                                          const std::set<VarId>& vars, const SearchBounds& b) {
  std::vector<MPoly> sources;
  for (const auto& c : coeffs) {
    add_pool_sources(c.num(), sources);
    add_pool_sources(c.den(), sources);
  }
  std::vector<MPoly> pool;
  for (const auto& s : sources) {
    int reach = b.window;
    for (VarId v : s.variables()) reach = std::max(reach, b.window + std::abs(v.shift));
    for (int k = -reach; k <= reach; ++k) {
      Element img = p.sigma(RatFunc(s), k);
      if (!img.is_polynomial()) continue;
      MPoly q = img.num().monic();
      if (q.is_constant() || q.total_degree() > b.degree || !within(q, vars)) continue;
      if (std::find(pool.begin(), pool.end(), q) == pool.end()) pool.push_back(q);
    }
  }
  std::sort(pool.begin(), pool.end(), [](const MPoly& x, const MPoly& y) {
    if (x.total_degree() != y.total_degree()) return x.total_degree() < y.total_degree();
    return grlex_cmp(x.leading_monomial(), y.leading_monomial()) < 0;
  });
  struct Cand {
    int degree;
    std::vector<size_t> idx;
  };
  std::vector<Cand> cands{{0, {}}};
  std::vector<size_t> cur;
  std::function<void(size_t, int)> rec = [&](size_t from, int deg) {
    if (static_cast<int>(cur.size()) == b.den_factors) return;
    for (size_t i = from; i < pool.size(); ++i) {
      int nd = deg + pool[i].total_degree();
      if (nd > b.degree) continue;
      cur.push_back(i);
      cands.push_back({nd, cur});
      rec(i, nd);
      cur.pop_back();
    }
  };
  rec(0, 0);
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.degree != y.degree) return x.degree < y.degree;
    if (x.idx.size() != y.idx.size()) return x.idx.size() < y.idx.size();
    return x.idx < y.idx;
  });
  std::vector<MPoly> out;
  for (const auto& c : cands) {
    MPoly d(Rat(1));
    for (size_t i : c.idx) d *= pool[i];
    out.push_back(d);
  }
  return out;
}

AnsatzSpace space_over(const Presentation& p, std::vector<VarId> vars, const std::vector<Element>& coeffs,
                       const SearchBounds& b) {
  std::sort(vars.begin(), vars.end());
  AnsatzSpace s;
  s.vars = vars;
  s.monomials = monomials_upto(vars, b.degree);
  s.denominators = denominator_candidates(p, coeffs, std::set<VarId>(vars.begin(), vars.end()), b);
  return s;
}

Element assemble(const RatVec& c, const std::vector<Monomial>& monomials, const MPoly& den) {
  std::vector<MPoly::Term> terms;
  for (size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0) terms.emplace_back(monomials[i], c[i]);
  return RatFunc::normalize(MPoly::from_terms(std::move(terms)), den);
}

struct SearchOutcome {
  std::optional<Element> x;
  long tried = 0;
};

SearchOutcome search(const Presentation& p, const Element& e1, const Element& e2, bool homogeneous,
                     const AnsatzSpace& s) {
  SearchOutcome out;
  for (const auto& den : s.denominators) {
    ++out.tried;
    CoefficientSystem sys = coefficient_system(p, e1, e2, den, s.monomials);
    std::optional<RatVec> c = homogeneous ? column_dependency(sys) : solve_columns(sys);
    if (!c) continue;
    out.x = assemble(*c, s.monomials, den);
    return out;
  }
  return out;
}

std::vector<VarId> window_vars(const Presentation& p, int window) {
  std::vector<VarId> vars;
  for (const auto& g : p.generators()) {
    if (g.is_free())
      for (int k = -window; k <= window; ++k) vars.push_back({g.id, k});
    else
      vars.push_back({g.id, 0});
  }
  return vars;
}

}  // namespace

AnsatzSpace ansatz_space(const Presentation& p, const std::vector<Element>& coefficients, const SearchBounds& b) {
  if (b.degree < 0 || b.window < 0) throw std::invalid_argument("search bounds must be nonnegative");
  return space_over(p, window_vars(p, b.window), coefficients, b);
}

CoefficientSystem coefficient_system(const Presentation& p, const Element& e1, const Element& e2,
                                     const MPoly& den, const std::vector<Monomial>& monomials) {
  // sigma of each ansatz variable as nv/dv; M clears every dv^e with e <= degree.
  std::map<VarId, std::vector<MPoly>> num_pow, den_pow;
  std::map<VarId, int> max_exp;
  for (const auto& m : monomials)
    for (const auto& [v, e] : m.factors()) max_exp[v] = std::max(max_exp[v], e);
  MPoly M(Rat(1));
  for (const auto& [v, e] : max_exp) {
    Element img = p.sigma(RatFunc::var(v));
    auto& np = num_pow[v];
    np.push_back(MPoly(Rat(1)));
    for (int k = 1; k <= e; ++k) np.push_back(np.back() * img.num());
    if (!img.den().is_constant()) {
      auto& dp = den_pow[v];
      dp.push_back(MPoly(Rat(1)));
      for (int k = 1; k <= e; ++k) dp.push_back(dp.back() * img.den());
      M *= dp.back();
    } else if (img.den().constant_value() != 1) {
      throw std::logic_error("unnormalized image");
    }
  }
  Element S = p.sigma(RatFunc(den));
  const MPoly& n1 = e1.num();
  const MPoly& d1 = e1.den();
  const MPoly& n2 = e2.num();
  const MPoly& d2 = e2.den();
  MPoly P1 = den * d1 * d2 * S.den();
  MPoly P2 = n1 * d2 * M * S.num();

  CoefficientSystem sys;
  sys.columns.reserve(monomials.size());
  for (const auto& m : monomials) {
    MPoly sm(Rat(1));
    for (const auto& [v, e] : m.factors()) sm *= num_pow[v][static_cast<size_t>(e)];
    for (const auto& [v, dp] : den_pow) sm *= dp[dp.size() - 1 - static_cast<size_t>(m.degree_in(v))];
    sys.columns.push_back(sm * P1 - P2.mul_monomial(m));
  }
  sys.rhs = n2 * d1 * M * den * S.num();
  return sys;
}

namespace {

// Output monomials indexed in decreasing grlex, so a polynomial's terms map to
// increasing indices and its leading term becomes the pivot candidate.
class OutputIndex {
 public:
  explicit OutputIndex(const CoefficientSystem& sys) {
    std::set<Monomial, MonomialLess> all;
    for (const auto& c : sys.columns)
      for (const auto& t : c.terms()) all.insert(t.first);
    for (const auto& t : sys.rhs.terms()) all.insert(t.first);
    int k = static_cast<int>(all.size());
    for (const auto& m : all) idx_.emplace(m, --k);
    size_ = static_cast<int>(all.size());
  }
  int size() const { return size_; }
  SparseEchelon::Row row(const MPoly& p, int tag = -1) const {
    SparseEchelon::Row r;
    r.reserve(p.terms().size() + 1);
    for (const auto& [m, c] : p.terms()) r.emplace_back(idx_.at(m), c);
    if (tag >= 0) r.emplace_back(size_ + tag, Rat(1));
    return r;
  }

 private:
  std::map<Monomial, int, MonomialLess> idx_;
  int size_ = 0;
};

RatVec tags(const SparseEchelon::Row& r, int offset, size_t n, bool negate) {
  RatVec x(n);
  for (const auto& [c, v] : r) {
    if (c < offset) throw std::logic_error("column reduction left an output term");
    x[static_cast<size_t>(c - offset)] = negate ? Rat(-v) : v;
  }
  return x;
}

}  // namespace

std::optional<RatVec> solve_columns(const CoefficientSystem& sys) {
  OutputIndex oi(sys);
  {
    SparseEchelon ech(oi.size());
    for (const auto& c : sys.columns) ech.insert(oi.row(c));
    if (!ech.reduced(oi.row(sys.rhs)).empty()) return std::nullopt;
  }
  // Consistent: redo with the column combinations tracked.
  int n = static_cast<int>(sys.columns.size());
  SparseEchelon ech(oi.size() + n);
  for (int j = 0; j < n; ++j) {
    auto r = ech.reduced(oi.row(sys.columns[static_cast<size_t>(j)], j));
    if (r.front().first >= oi.size()) continue;
    ech.insert(std::move(r));
  }
  return tags(ech.reduced(oi.row(sys.rhs)), oi.size(), static_cast<size_t>(n), true);
}

std::optional<RatVec> column_dependency(const CoefficientSystem& sys) {
  OutputIndex oi(sys);
  {
    SparseEchelon ech(oi.size());
    bool dependent = false;
    for (const auto& c : sys.columns)
      if (!ech.insert(oi.row(c))) {
        dependent = true;
        break;
      }
    if (!dependent) return std::nullopt;
  }
  int n = static_cast<int>(sys.columns.size());
  SparseEchelon ech(oi.size() + n);
  for (int j = 0; j < n; ++j) {
    auto r = ech.reduced(oi.row(sys.columns[static_cast<size_t>(j)], j));
    if (r.front().first >= oi.size()) return tags(r, oi.size(), static_cast<size_t>(n), false);
    ech.insert(std::move(r));
  }
  throw std::logic_error("dependency lost on replay");
}

std::vector<RatVec> column_kernel(const CoefficientSystem& sys) {
  OutputIndex oi(sys);
  int n = static_cast<int>(sys.columns.size());
  SparseEchelon ech(oi.size() + n);
  std::vector<RatVec> out;
  for (int j = 0; j < n; ++j) {
    auto r = ech.reduced(oi.row(sys.columns[static_cast<size_t>(j)], j));
    if (r.front().first >= oi.size())
      out.push_back(tags(r, oi.size(), static_cast<size_t>(n), false));
    else
      ech.insert(std::move(r));
  }
  return out;
}

SolveResult solve_twisted_bounded(const Presentation& p, const TwistedSAS& eq, const SearchBounds& b) {
  if (eq.e1.is_zero()) throw std::invalid_argument("e1 must be nonzero");
  AnsatzSpace s = ansatz_space(p, {eq.e1, eq.e2}, b);
  SearchOutcome r = search(p, eq.e1, eq.e2, false, s);
  if (r.x) {
    if (!satisfies(p, eq, *r.x)) throw std::logic_error("ansatz solution failed verification");
    return Solution{*r.x};
  }
  return NoSolutionWithinBounds{b, r.tried};
}

SolveResult solve_multiplicative_bounded(const Presentation& p, const MultiplicativeSAS& eq, const SearchBounds& b) {
  if (eq.z == 0) throw std::invalid_argument("z must be nonzero");
  if (eq.e.is_zero()) throw std::invalid_argument("e must be nonzero");
  Element c = eq.e.pow(static_cast<int>(eq.z));
  AnsatzSpace s = ansatz_space(p, {c}, b);
  SearchOutcome r = search(p, c, Element(), true, s);
  if (r.x) {
    if (!satisfies(p, eq, *r.x)) throw std::logic_error("ansatz solution failed verification");
    return Solution{*r.x};
  }
  if (p.all_free()) {
    Decision d = decide_free_base(p, eq, b);
    if (auto* u = std::get_if<Unsolvable>(&d)) return *u;
    if (auto* w = std::get_if<Solvable>(&d)) return Solution{w->witness};
  }
  return NoSolutionWithinBounds{b, r.tried};
}

// ---- free base -----------------------------------------------------------------

namespace {

std::string window_str(int lo, int hi) {
  return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]" + (lo > hi ? " empty" : "");
}

}  // namespace

Decision decide_free_base(const Presentation& p, const SasEquation& eq, const SearchBounds& residual) {
  if (!p.all_free()) throw std::invalid_argument("decide_free_base needs a presentation of free generators");
  std::vector<Element> support;
  Element e1, e2;
  std::optional<Element> fam_base;
  std::visit(overloaded{
                 [&](const TwistedSAS& t) {
                   if (t.e1.is_zero()) throw std::invalid_argument("e1 must be nonzero");
                   e1 = t.e1;
                   e2 = t.e2;
                   support = {e1, e2};
                 },
                 [&](const MultiplicativeSAS& m) {
                   if (m.z == 0) throw std::invalid_argument("z must be nonzero");
                   e1 = m.e.pow(static_cast<int>(m.z));
                   support = {e1};
                 },
                 [&](const MultiplicativeFamily& f) {
                   if (f.zs.contains_zero()) throw std::invalid_argument("exponent set contains zero");
                   fam_base = f.e;
                   support = {f.e};  // e^z and e share their variables for z != 0
                 },
             },
             eq);
  for (const auto& c : support)
    if (!p.contains(c)) throw std::invalid_argument("coefficients are not elements of the presentation");

  Certificate cert;
  CertStep ext;
  ext.rule = "extremal-shift";
  ext.field = field_str(p);
  ext.equation = equation_str(p, eq);
  std::vector<VarId> residual_vars;
  std::ostringstream det;
  det << "a solution with extreme shift k of h needs h[k] and h[k+1] in the coefficients;";
  for (const auto& g : p.generators()) {
    std::optional<std::pair<int, int>> w;
    for (const auto& c : support) {
      auto cw = Presentation::shift_window(c, g.id);
      if (!cw) continue;
      if (!w) w = cw;
      w->first = std::min(w->first, cw->first);
      w->second = std::max(w->second, cw->second);
    }
    int lo = w ? w->first : 0, hi = w ? w->second - 1 : -1;
    det << " " << g.name << ": " << window_str(lo, hi) << ";";
    for (int k = lo; k <= hi; ++k) residual_vars.push_back({g.id, k});
  }
  if (!residual_vars.empty()) {
    if (fam_base) return Undecided{"extremal-shift window nonempty for a symbolic family"};
    const auto* t = std::get_if<TwistedSAS>(&eq);
    AnsatzSpace s = space_over(p, residual_vars, support, residual);
    SearchOutcome r = search(p, e1, t ? e2 : Element(), t == nullptr, s);
    if (r.x && satisfies(p, eq, *r.x)) return Solvable{*r.x};
    return Undecided{"extremal-shift window nonempty and no solution of degree <= " +
                     std::to_string(residual.degree) + " inside it"};
  }
  det << " so every solution is a rational constant q";
  ext.detail = det.str();
  ext.children = {1};
  CertStep cst;
  cst.rule = "constant-case";
  cst.field = "Q";
  if (fam_base) {
    const Element& h = *fam_base;
    cst.equation = "q*(1 - " + power_str(p.str(h), "z") + ") = 0, q != 0";
    if (h.is_constant()) {
      Rat v = h.constant_value();
      if (v == 1 || v == -1) return Undecided{"constant base of modulus one"};
      cst.detail = "|" + rat_str(v) + "|^z != 1 for z != 0";
    } else {
      cst.detail = paren(p.str(h)) + "^z is nonconstant for z != 0";
    }
  } else if (std::holds_alternative<MultiplicativeSAS>(eq)) {
    cst.equation = "q*(1 - " + paren(p.str(e1)) + ") = 0, q != 0";
    if (e1 == RatFunc(1)) return Solvable{Element(1)};
    cst.detail = paren(p.str(e1)) + " != 1";
  } else {
    cst.equation = "(1 - " + paren(p.str(e1)) + ")*q = " + p.str(e2);
    if (e1 == RatFunc(1)) {
      if (e2.is_zero()) return Solvable{Element(0)};
      cst.detail = "left side vanishes, right side " + p.str(e2) + " != 0";
    } else {
      Element q = e2 / (Element(1) - e1);
      if (q.is_constant()) return Solvable{q};
      cst.detail = "forces q = " + p.str(q) + ", not in Q";
    }
  }
  cert.steps = {ext, cst};
  return Unsolvable{cert};
}

// ---- descent -------------------------------------------------------------------

Element descent_linear(const Presentation& p, const std::vector<Element>& c, const Element& e1, const Element& e2) {
  if (c.empty()) throw std::invalid_argument("empty coefficient list");
  Element x = -c[0] / Element(static_cast<long>(c.size()));
  if (!satisfies(p, TwistedSAS{e1, e2}, x)) throw DescentViolated();
  return x;
}

Element descent_multiplicative(const Presentation& p, const std::vector<Element>& c, const Element& e, long z) {
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i].is_zero()) continue;
    long k = static_cast<long>(i) + 1;
    if (!satisfies(p, MultiplicativeSAS{e, z * k}, c[i])) throw DescentViolated();
    return c[i];
  }
  throw std::invalid_argument("all coefficients zero");
}

// ---- reduction -----------------------------------------------------------------

namespace {

std::string fresh_name(const Presentation& p, std::string base) {
  while (p.find(base)) base += "'";
  return base;
}

struct TopParts {
  Element e1, e2;
  bool homogeneous = false;
};

TopParts top_parts(const SasEquation& eq) {
  return std::visit(overloaded{
                        [](const TwistedSAS& t) { return TopParts{t.e1, t.e2, false}; },
                        [](const MultiplicativeSAS& m) {
                          return TopParts{m.e.pow(static_cast<int>(m.z)), Element(), true};
                        },
                        [](const MultiplicativeFamily&) -> TopParts {
                          throw std::invalid_argument("reduce a concrete exponent, not a family");
                        },
                    },
                    eq);
}

}  // namespace

Reduction reduce_over_affine_extension(const Presentation& p, int gen, const SasEquation& eq, int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("ansatz degrees must be nonnegative");
  const GeneratorSpec& a = p.spec(gen);
  if (a.is_free()) throw std::invalid_argument("generator '" + a.name + "' is not affine");
  TopParts tp = top_parts(eq);
  const VarId av{gen, 0};
  if (tp.e1.mentions(av)) throw std::invalid_argument("e1 must lie in the base");
  if (tp.e2.den().mentions(av)) throw std::invalid_argument("e2 must be polynomial in '" + a.name + "'");

  Presentation pe = p;
  std::vector<int> e_ids, f_ids;
  for (int i = 0; i <= n; ++i) e_ids.push_back(pe.add_free(fresh_name(pe, "e" + std::to_string(i))));
  for (int j = 0; j <= m; ++j) f_ids.push_back(pe.add_free(fresh_name(pe, "f" + std::to_string(j))));
  int y_id = pe.add_free(fresh_name(pe, "y"));
  Element A = pe.var(gen);
  Element N, D;
  for (int i = 0; i <= n; ++i) N += pe.var(e_ids[static_cast<size_t>(i)]) * A.pow(i);
  for (int j = 0; j <= m; ++j) D += pe.var(f_ids[static_cast<size_t>(j)]) * A.pow(j);
  Element sN = pe.sigma(N), sD = pe.sigma(D);
  Element L = sN * D - tp.e1 * N * sD;
  if (!tp.homogeneous) L -= tp.e2 * D * sD;
  if (L.den().mentions(av)) throw std::logic_error("cleared equation not polynomial in the top generator");
  std::vector<MPoly> cs = L.num().coeffs_in(av);
  Element T = RatFunc::normalize(cs.back(), L.den());

  Reduction r;
  r.top_identity = "[" + a.name + "^" + std::to_string(cs.size() - 1) + "] " + pe.str(T) + " = 0";
  const VarId en{e_ids.back(), 0}, en1{e_ids.back(), 1}, fm{f_ids.back(), 0}, fm1{f_ids.back(), 1};
  Element y = pe.var(y_id), y1 = pe.var(y_id, 1);
  Element R = T.substitute({{en, y * RatFunc::var(fm)}, {en1, y1 * RatFunc::var(fm1)}}) /
              (RatFunc::var(fm) * RatFunc::var(fm1));
  // R = Ay*y[1] + By*y + C with coefficients in the base.
  const VarId yv{y_id, 0}, y1v{y_id, 1};
  auto split = [&](const MPoly& poly, VarId v) {
    std::vector<MPoly> c = poly.coeffs_in(v);
    if (c.size() > 2) throw std::logic_error("top coefficient not linear in the unknown");
    c.resize(2);
    return c;
  };
  auto c1 = split(R.num(), y1v);
  auto c0 = split(c1[0], yv);
  if (c1[1].mentions(yv)) throw std::logic_error("top coefficient has a y*s(y) term");
  Element Ay = RatFunc::normalize(c1[1], R.den());
  Element By = RatFunc::normalize(c0[1], R.den());
  Element C = RatFunc::normalize(c0[0], R.den());
  for (const Element* x : {&Ay, &By, &C})
    if (!p.contains(*x)) throw std::logic_error("top coefficient does not reduce to the base");
  if (Ay.is_zero() && By.is_zero()) {
    if (C.is_zero()) throw std::logic_error("top coefficient vanished identically");
    r.kind = Reduction::Kind::Contradiction;
    return r;
  }
  if (Ay.is_zero() || By.is_zero()) throw std::logic_error("degenerate top coefficient");
  r.kind = Reduction::Kind::Equation;
  Element k1 = -By / Ay, k2 = -C / Ay;
  if (k2.is_zero()) r.derived = MultiplicativeSAS{k1, 1};
  else r.derived = TwistedSAS{k1, k2};
  return r;
}

Reduction reduce_with_ansatz(const Presentation& p, int gen, const SasEquation& eq,
                             const std::vector<Element>& num_coeffs, const std::vector<Element>& den_coeffs) {
  if (num_coeffs.empty() || den_coeffs.empty() || num_coeffs.back().is_zero() || den_coeffs.back().is_zero())
    throw std::invalid_argument("not in normal position");
  return reduce_over_affine_extension(p, gen, eq, static_cast<int>(num_coeffs.size()) - 1,
                                      static_cast<int>(den_coeffs.size()) - 1);
}

// ---- certification -------------------------------------------------------------

namespace {

std::optional<long> power_of(const Element& x, const Element& h) {
  if (x == RatFunc(1)) return 0;
  if (h.is_constant() || x.is_constant()) return std::nullopt;
  long dx = x.num().total_degree() - x.den().total_degree();
  long dh = h.num().total_degree() - h.den().total_degree();
  std::vector<long> tries;
  if (dh != 0) {
    if (dx % dh != 0) return std::nullopt;
    tries.push_back(dx / dh);
  } else {
    for (long z = 1; z <= 12; ++z) tries.insert(tries.end(), {z, -z});
  }
  for (long z : tries)
    if (z != 0 && h.pow(static_cast<int>(z)) == x) return z;
  return std::nullopt;
}

bool subset_of(const Presentation& field, const Presentation& big) {
  for (const auto& g : field.generators())
    if (!big.has(g.id) || big.spec(g.id).name != g.name) return false;
  return true;
}

}  // namespace

const RegistryEntry* AvoidedRegistry::lookup(const Presentation& field, const SasEquation& eq) const {
  if (!subset_of(field, presentation)) return nullptr;
  for (const auto& e : entries) {
    if (same_equation(e.equation, eq)) return &e;
    const auto* fam = std::get_if<MultiplicativeFamily>(&e.equation);
    if (!fam || fam->zs.kind != ExponentSet::Kind::AllNonzero) continue;
    if (const auto* f = std::get_if<MultiplicativeFamily>(&eq)) {
      if (f->e == fam->e && !f->zs.contains_zero()) return &e;
    } else if (const auto* m = std::get_if<MultiplicativeSAS>(&eq)) {
      auto w = power_of(m->e.pow(static_cast<int>(m->z)), fam->e);
      if (w && *w != 0) return &e;
    }
  }
  return nullptr;
}

namespace {

class Certifier {
 public:
  explicit Certifier(const AvoidedRegistry* reg) : reg_(reg) {}
  Certificate cert;
  std::string failure;

  // Returns the index of the step certifying eq over p, or -1.
  int run(const Presentation& p, const SasEquation& eq) {
    int idx = push();
    cert.steps[idx].field = field_str(p);
    cert.steps[idx].equation = equation_str(p, eq);
    if (reg_) {
      if (const RegistryEntry* e = reg_->lookup(p, eq)) {
        cert.steps[idx].rule = "registry";
        cert.steps[idx].detail = "avoided family '" + e->name + "' over " + field_str(reg_->presentation);
        return idx;
      }
    }
    if (p.all_free()) {
      Decision d = decide_free_base(p, eq);
      if (auto* u = std::get_if<Unsolvable>(&d)) {
        splice(idx, u->certificate);
        return idx;
      }
      if (std::holds_alternative<Solvable>(d))
        return fail("solvable over " + field_str(p) + ": " + equation_str(p, eq));
      return fail(std::get<Undecided>(d).reason + ": " + equation_str(p, eq));
    }
    const GeneratorSpec* top = &p.generators().front();
    for (const auto& g : p.generators())
      if (g.id > top->id) top = &g;
    if (top->is_free()) return fail("top generator '" + top->name + "' is free");
    std::set<int> rest;
    for (const auto& g : p.generators())
      if (g.id != top->id) rest.insert(g.id);
    Presentation k = p.restrict_to(rest);
    std::string rule = "s(" + top->name + ") = " + paren(p.str(top->linear)) + "*" + top->name + " + " +
                       paren(p.str(top->constant));
    cert.steps[idx].rule = "affine-extension";
    cert.steps[idx].detail = "top generator " + top->name + " with " + rule + "; x = (sum e_i " + top->name +
                             "^i)/(sum f_j " + top->name + "^j), e_n f_m != 0";
    if (!extension_cases(idx, p, k, *top, eq)) return -1;
    return idx;
  }

 private:
  const AvoidedRegistry* reg_;

  int push() {
    cert.steps.emplace_back();
    return static_cast<int>(cert.steps.size()) - 1;
  }
  int fail(std::string why) {
    if (failure.empty()) failure = std::move(why);
    return -1;
  }
  void splice(int idx, const Certificate& sub) {
    int off = static_cast<int>(cert.steps.size()) - 1;
    CertStep root = sub.steps.front();
    for (int& c : root.children) c += off;
    cert.steps[idx] = root;
    for (size_t i = 1; i < sub.steps.size(); ++i) {
      CertStep s = sub.steps[i];
      for (int& c : s.children) c += off;
      cert.steps.push_back(s);
    }
  }

  std::string samples(const std::vector<std::pair<int, int>>& nm) {
    std::string s = "checked at (n,m) =";
    for (size_t i = 0; i < nm.size(); ++i)
      s += (i ? ", (" : " (") + std::to_string(nm[i].first) + "," + std::to_string(nm[i].second) + ")";
    return s;
  }

  // Each sample reduction must reproduce the expected outcome.
  bool check_samples(const Presentation& p, int gen, const std::vector<std::pair<SasEquation, std::pair<int, int>>>& runs,
                     const std::function<bool(const Reduction&, int d)>& ok) {
    for (const auto& [eq, nm] : runs) {
      Reduction r = reduce_over_affine_extension(p, gen, eq, nm.first, nm.second);
      if (!ok(r, nm.first - nm.second)) {
        fail("sample reduction at (n,m) = (" + std::to_string(nm.first) + "," + std::to_string(nm.second) +
             ") disagrees with the degree case");
        return false;
      }
    }
    return true;
  }

  std::optional<Element> choose_base(std::initializer_list<Element> xs, const Element& alpha) {
    std::vector<Element> cands;
    if (reg_) cands.push_back(reg_->base);
    for (const auto& x : xs)
      if (!x.is_constant()) cands.push_back(x);
    if (!alpha.is_constant()) cands.push_back(alpha);
    for (const auto& h : cands) {
      bool all = power_of(alpha, h).has_value();
      for (const auto& x : xs) all = all && power_of(x, h).has_value();
      if (all) return h;
    }
    return std::nullopt;
  }

  bool family_case(int parent, const Presentation& p, const Presentation& k, const GeneratorSpec& top,
                   const Element& coeff, std::optional<long> lower, const std::string& case_text,
                   const std::vector<std::pair<SasEquation, std::pair<int, int>>>& runs) {
    const Element& alpha = top.linear;
    auto h = choose_base({coeff}, alpha);
    if (!h) {
      fail("coefficient " + p.str(coeff) + " and " + p.str(alpha) + " are not powers of a common base");
      return false;
    }
    long z0 = *power_of(coeff, *h), za = *power_of(alpha, *h);
    ExponentSet zs = ExponentSet::affine(z0, -za, lower);
    MultiplicativeFamily fam{*h, zs};
    if (zs.contains_zero()) {
      fail("degree case " + case_text + " allows s(y) = y: " + equation_str(k, fam, "y"));
      return false;
    }
    bool ok = check_samples(p, top.id, runs, [&](const Reduction& r, int d) {
      if (r.kind != Reduction::Kind::Equation) return false;
      const auto* m = std::get_if<MultiplicativeSAS>(&r.derived);
      return m && m->z == 1 && m->e == h->pow(static_cast<int>(z0 - za * d));
    });
    if (!ok) return false;
    int idx = push();
    cert.steps[parent].children.push_back(idx);
    std::vector<std::pair<int, int>> nm;
    for (const auto& r : runs) nm.push_back(r.second);
    CertStep& s = cert.steps[idx];
    s.rule = "leading-coefficient";
    s.field = field_str(k);
    s.equation = cert.steps[parent].equation;
    s.detail = "degree case " + case_text + ": top coefficients cancel; " + samples(nm);
    s.derived = {equation_str(k, fam, "y")};
    int child = run(k, fam);
    if (child < 0) return false;
    cert.steps[idx].children = {child};
    return true;
  }

  bool extension_cases(int parent, const Presentation& p, const Presentation& k, const GeneratorSpec& top,
                       const SasEquation& eq) {
    const VarId av{top.id, 0};
    const Element& alpha = top.linear;
    if (const auto* f = std::get_if<MultiplicativeFamily>(&eq)) {
      if (alpha != RatFunc(1)) return fail("multiplicative family over a twisted extension") >= 0;
      if (f->e.mentions(av)) return fail("family base involves the top generator") >= 0;
      std::vector<std::pair<SasEquation, std::pair<int, int>>> runs;
      for (long z : {1L, -2L}) {
        if (f->zs.kind == ExponentSet::Kind::Affine) z = f->zs.c0 + f->zs.c1 * (f->zs.lower.value_or(0) + 1);
        for (auto nm : {std::pair{0, 0}, std::pair{2, 1}}) runs.push_back({MultiplicativeSAS{f->e, z}, nm});
      }
      bool ok = check_samples(p, top.id, runs, [&](const Reduction& r, int) {
        if (r.kind != Reduction::Kind::Equation) return false;
        const auto* m = std::get_if<MultiplicativeSAS>(&r.derived);
        return m && m->z == 1;
      });
      for (const auto& [req, nm] : runs) {
        Reduction r = reduce_over_affine_extension(p, top.id, req, nm.first, nm.second);
        ok = ok && std::get<MultiplicativeSAS>(r.derived).e == std::get<MultiplicativeSAS>(req).e.pow(
                                                                     static_cast<int>(std::get<MultiplicativeSAS>(req).z));
      }
      if (!ok) return fail("sample reduction of the family disagrees") >= 0;
      int idx = push();
      cert.steps[parent].children.push_back(idx);
      CertStep& s = cert.steps[idx];
      s.rule = "leading-coefficient";
      s.field = field_str(k);
      s.equation = cert.steps[parent].equation;
      s.detail = "every degree case: top coefficients cancel, the torsor rule leaves the exponent unchanged; " +
                 samples({{0, 0}, {2, 1}});
      s.derived = {equation_str(k, eq, "y")};
      int child = run(k, eq);
      if (child < 0) return false;
      cert.steps[idx].children = {child};
      return true;
    }
    TopParts tp = top_parts(eq);
    if (tp.e1.mentions(av)) return fail("e1 involves the top generator " + top.name) >= 0;
    if (!p.contains(tp.e1) || !p.contains(tp.e2)) return fail("coefficients outside " + field_str(p)) >= 0;
    for (const auto& x : {tp.e1, tp.e2})
      for (VarId v : x.variables())
        if (v.gen == top.id && v.shift != 0) return fail("coefficients involve shifts of " + top.name) >= 0;
    if (tp.e2.den().mentions(av)) return fail("e2 is not polynomial in " + top.name) >= 0;
    if (tp.homogeneous) {
      const auto& m = std::get<MultiplicativeSAS>(eq);
      std::vector<std::pair<SasEquation, std::pair<int, int>>> runs;
      for (auto nm : {std::pair{0, 1}, std::pair{0, 0}, std::pair{2, 1}}) runs.push_back({m, nm});
      return family_case(parent, p, k, top, tp.e1, std::nullopt, "any n-m", runs);
    }
    if (tp.e2.is_zero()) return fail("homogeneous twisted equation has the zero solution") >= 0;
    std::vector<MPoly> cs = tp.e2.num().coeffs_in(av);
    int k2 = static_cast<int>(cs.size()) - 1;
    Element lc = RatFunc::normalize(cs.back(), tp.e2.den());
    const SasEquation& teq = eq;

    // n - m < k2: the right side dominates.
    {
      std::vector<std::pair<int, int>> nm{{0, 1}};
      if (k2 >= 1) nm.push_back({k2 - 1, 0});
      std::vector<std::pair<SasEquation, std::pair<int, int>>> runs;
      for (auto x : nm) runs.push_back({teq, x});
      if (!check_samples(p, top.id, runs, [](const Reduction& r, int) { return r.kind == Reduction::Kind::Contradiction; }))
        return false;
      int idx = push();
      cert.steps[parent].children.push_back(idx);
      CertStep& s = cert.steps[idx];
      s.rule = "degree-bound";
      s.field = field_str(k);
      s.equation = cert.steps[parent].equation;
      s.detail = "degree case n-m < " + std::to_string(k2) + ": right side has degree 2m+" + std::to_string(k2) +
                 " above the left side; " + samples(nm);
      s.derived = {"0 = " + paren(k.str(lc)) + "*f_m*s(f_m)*" + power_str(k.str(alpha), "m")};
    }
    // n - m = k2: both sides meet at the top.
    {
      Element c1 = tp.e1 * alpha.pow(-k2), c2 = lc * alpha.pow(-k2);
      TwistedSAS derived{c1, c2};
      std::vector<std::pair<int, int>> nm{{k2, 0}, {k2 + 1, 1}};
      std::vector<std::pair<SasEquation, std::pair<int, int>>> runs;
      for (auto x : nm) runs.push_back({teq, x});
      if (!check_samples(p, top.id, runs, [&](const Reduction& r, int) {
            return r.kind == Reduction::Kind::Equation && same_equation(r.derived, derived);
          }))
        return false;
      int idx = push();
      cert.steps[parent].children.push_back(idx);
      CertStep& s = cert.steps[idx];
      s.rule = "leading-coefficient";
      s.field = field_str(k);
      s.equation = cert.steps[parent].equation;
      s.detail = "degree case n-m = " + std::to_string(k2) + ": divide the top coefficient by f_m*s(f_m)*" +
                 power_str(p.str(alpha), "n") + ", y = e_n/f_m; " + samples(nm);
      s.derived = {equation_str(k, derived, "y")};
      int child = run(k, derived);
      if (child < 0) return false;
      cert.steps[idx].children = {child};
    }
    // n - m > k2: cancellation at the top.
    {
      std::vector<std::pair<SasEquation, std::pair<int, int>>> runs;
      for (auto x : {std::pair{k2 + 1, 0}, std::pair{k2 + 3, 1}}) runs.push_back({teq, x});
      return family_case(parent, p, k, top, tp.e1, k2, "n-m > " + std::to_string(k2), runs);
    }
  }
};

}  // namespace

CertifyResult certify_unsolvable(const Presentation& p, const SasEquation& eq, const AvoidedRegistry* registry) {
  Certifier c(registry);
  int root = c.run(p, eq);
  if (root < 0) return Unknown{c.failure.empty() ? "no certificate" : c.failure};
  return c.cert;
}

bool replay_certificate(const Presentation& p, const SasEquation& eq, const AvoidedRegistry* registry,
                        const Certificate& cert, std::string* diagnostic) {
  CertifyResult again = certify_unsolvable(p, eq, registry);
  const auto* c = std::get_if<Certificate>(&again);
  if (!c) {
    if (diagnostic) *diagnostic = "re-derivation failed: " + std::get<Unknown>(again).reason;
    return false;
  }
  if (c->steps.size() != cert.steps.size()) {
    if (diagnostic) *diagnostic = "step count differs";
    return false;
  }
  for (size_t i = 0; i < c->steps.size(); ++i) {
    if (!(c->steps[i] == cert.steps[i])) {
      if (diagnostic) *diagnostic = "step " + std::to_string(i) + " differs: " + cert.steps[i].equation;
      return false;
    }
  }
  return true;
}

}  // namespace dfield
