#include "dfield/exact.hpp"

#include <algorithm>
#include <sstream>

namespace dfield {

Rat make_rat(long num, long den) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

std::string rat_str(const Rat& q) { return q.get_str(); }

Rat parse_rat(const std::string& text) {
  Rat q;
  if (q.set_str(text, 10) != 0) throw std::invalid_argument("bad rational: " + text);
  if (q.get_den() == 0) throw std::domain_error("division by zero");
  q.canonicalize();
  return q;
}

// ---- Monomial ---------------------------------------------------------------

Monomial::Monomial(std::vector<std::pair<VarId, int>> factors) {
  std::sort(factors.begin(), factors.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [v, e] : factors) {
    if (!f_.empty() && f_.back().first == v)
      f_.back().second += e;
    else
      f_.emplace_back(v, e);
  }
  std::erase_if(f_, [](const auto& p) { return p.second == 0; });
  for (const auto& [v, e] : f_) {
    if (e < 0) throw std::invalid_argument("negative exponent in monomial");
    deg_ += e;
  }
}

Monomial Monomial::var(VarId v, int e) { return Monomial({{v, e}}); }

int Monomial::degree_in(VarId v) const {
  for (const auto& [w, e] : f_)
    if (w == v) return e;
  return 0;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  r.f_.reserve(f_.size() + o.f_.size());
  size_t i = 0, j = 0;
  while (i < f_.size() || j < o.f_.size()) {
    if (j == o.f_.size() || (i < f_.size() && f_[i].first < o.f_[j].first)) {
      r.f_.push_back(f_[i++]);
    } else if (i == f_.size() || o.f_[j].first < f_[i].first) {
      r.f_.push_back(o.f_[j++]);
    } else {
      r.f_.emplace_back(f_[i].first, f_[i].second + o.f_[j].second);
      ++i;
      ++j;
    }
  }
  r.deg_ = deg_ + o.deg_;
  return r;
}

std::optional<Monomial> Monomial::divide(const Monomial& o) const {
  Monomial r;
  size_t i = 0;
  for (const auto& [v, e] : o.f_) {
    while (i < f_.size() && f_[i].first < v) r.f_.push_back(f_[i++]);
    if (i == f_.size() || f_[i].first != v || f_[i].second < e) return std::nullopt;
    if (f_[i].second > e) r.f_.emplace_back(v, f_[i].second - e);
    ++i;
  }
  while (i < f_.size()) r.f_.push_back(f_[i++]);
  r.deg_ = deg_ - o.deg_;
  return r;
}

Monomial Monomial::without(VarId v) const {
  Monomial r;
  for (const auto& p : f_)
    if (p.first != v) {
      r.f_.push_back(p);
      r.deg_ += p.second;
    }
  return r;
}

Monomial Monomial::gcd(const Monomial& o) const {
  Monomial r;
  size_t i = 0, j = 0;
  while (i < f_.size() && j < o.f_.size()) {
    if (f_[i].first < o.f_[j].first) {
      ++i;
    } else if (o.f_[j].first < f_[i].first) {
      ++j;
    } else {
      int e = std::min(f_[i].second, o.f_[j].second);
      r.f_.emplace_back(f_[i].first, e);
      r.deg_ += e;
      ++i;
      ++j;
    }
  }
  return r;
}

int grlex_cmp(const Monomial& a, const Monomial& b) {
  if (a.deg_ != b.deg_) return a.deg_ < b.deg_ ? -1 : 1;
  size_t i = 0, j = 0;
  while (i < a.f_.size() && j < b.f_.size()) {
    const auto& [va, ea] = a.f_[i];
    const auto& [vb, eb] = b.f_[j];
    if (va == vb) {
      if (ea != eb) return ea > eb ? 1 : -1;
      ++i;
      ++j;
    } else {
      return va < vb ? 1 : -1;
    }
  }
  if (i < a.f_.size()) return 1;
  if (j < b.f_.size()) return -1;
  return 0;
}

std::string default_var_name(VarId v) {
  std::string s = "x" + std::to_string(v.gen);
  if (v.shift != 0) s += "[" + std::to_string(v.shift) + "]";
  return s;
}

// ---- MPoly --------------------------------------------------------------------

MPoly::MPoly(const Rat& c) {
  if (c != 0) t_.emplace_back(Monomial(), c);
}

MPoly MPoly::var(VarId v, int e) { return monomial(Monomial::var(v, e), Rat(1)); }

MPoly MPoly::monomial(const Monomial& m, const Rat& c) {
  MPoly p;
  if (c != 0) p.t_.emplace_back(m, c);
  return p;
}

MPoly MPoly::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return grlex_cmp(a.first, b.first) > 0; });
  MPoly p;
  for (auto& t : terms) {
    if (!p.t_.empty() && p.t_.back().first == t.first)
      p.t_.back().second += t.second;
    else {
      if (!p.t_.empty() && p.t_.back().second == 0) p.t_.pop_back();
      p.t_.push_back(std::move(t));
    }
  }
  if (!p.t_.empty() && p.t_.back().second == 0) p.t_.pop_back();
  return p;
}

MPoly MPoly::from_sorted(std::vector<Term> terms) {
  MPoly p;
  p.t_ = std::move(terms);
  return p;
}

Rat MPoly::constant_value() const {
  if (!is_constant()) throw std::logic_error("polynomial is not constant");
  return t_.empty() ? Rat(0) : t_[0].second;
}

int MPoly::total_degree() const { return t_.empty() ? -1 : t_.front().first.degree(); }

int MPoly::degree_in(VarId v) const {
  int d = t_.empty() ? -1 : 0;
  for (const auto& t : t_) d = std::max(d, t.first.degree_in(v));
  return d;
}

std::vector<VarId> MPoly::variables() const {
  std::vector<VarId> vs;
  for (const auto& t : t_)
    for (const auto& f : t.first.factors()) vs.push_back(f.first);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

bool MPoly::mentions(VarId v) const {
  for (const auto& t : t_)
    if (t.first.degree_in(v) > 0) return true;
  return false;
}

MPoly MPoly::operator-() const {
  MPoly r = *this;
  for (auto& t : r.t_) t.second = -t.second;
  return r;
}

namespace {
MPoly merge_add(const std::vector<MPoly::Term>& a, const std::vector<MPoly::Term>& b, bool negate_b) {
  std::vector<MPoly::Term> out;
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int c = i == a.size() ? -1 : j == b.size() ? 1 : grlex_cmp(a[i].first, b[j].first);
    if (c > 0) {
      out.push_back(a[i++]);
    } else if (c < 0) {
      out.emplace_back(b[j].first, negate_b ? Rat(-b[j].second) : b[j].second);
      ++j;
    } else {
      Rat s = negate_b ? Rat(a[i].second - b[j].second) : Rat(a[i].second + b[j].second);
      if (s != 0) out.emplace_back(a[i].first, std::move(s));
      ++i;
      ++j;
    }
  }
  return MPoly::from_sorted(std::move(out));
}
}  // namespace

MPoly MPoly::operator+(const MPoly& o) const {
  if (o.is_zero()) return *this;
  if (is_zero()) return o;
  return merge_add(t_, o.t_, false);
}

MPoly MPoly::operator-(const MPoly& o) const {
  if (o.is_zero()) return *this;
  return merge_add(t_, o.t_, true);
}

MPoly MPoly::operator*(const MPoly& o) const {
  if (is_zero() || o.is_zero()) return {};
  if (o.t_.size() == 1) return mul_monomial(o.t_[0].first) * o.t_[0].second;
  if (t_.size() == 1) return o.mul_monomial(t_[0].first) * t_[0].second;
  std::map<Monomial, Rat, MonomialLess> acc;
  for (const auto& [ma, ca] : t_)
    for (const auto& [mb, cb] : o.t_) {
      auto [it, fresh] = acc.try_emplace(ma * mb, ca * cb);
      if (!fresh) it->second += ca * cb;
    }
  MPoly r;
  r.t_.reserve(acc.size());
  for (auto it = acc.rbegin(); it != acc.rend(); ++it)
    if (it->second != 0) r.t_.emplace_back(it->first, std::move(it->second));
  return r;
}

MPoly MPoly::operator*(const Rat& c) const {
  if (c == 0) return {};
  MPoly r = *this;
  for (auto& t : r.t_) t.second *= c;
  return r;
}

MPoly MPoly::pow(unsigned e) const {
  MPoly r(Rat(1)), b = *this;
  while (e) {
    if (e & 1u) r = r * b;
    e >>= 1u;
    if (e) b = b * b;
  }
  return r;
}

MPoly MPoly::mul_monomial(const Monomial& m) const {
  if (m.is_one()) return *this;
  MPoly r;
  r.t_.reserve(t_.size());
  // Multiplying by a monomial preserves grlex order.
  for (const auto& [mm, c] : t_) r.t_.emplace_back(mm * m, c);
  return r;
}

std::optional<MPoly> MPoly::try_div(const MPoly& o) const {
  if (o.is_zero()) throw std::domain_error("division by zero");
  if (o.is_constant()) return *this * Rat(1 / o.constant_value());
  std::vector<Term> q;
  MPoly r = *this;
  const Monomial& lm = o.leading_monomial();
  const Rat& lc = o.leading_coeff();
  while (!r.is_zero()) {
    auto m = r.leading_monomial().divide(lm);
    if (!m) return std::nullopt;
    Rat c = r.leading_coeff() / lc;
    r = r - o.mul_monomial(*m) * c;
    q.emplace_back(std::move(*m), std::move(c));
  }
  return from_terms(std::move(q));
}

MPoly MPoly::exact_div(const MPoly& o) const {
  auto q = try_div(o);
  if (!q) throw std::domain_error("inexact polynomial division");
  return *q;
}

std::vector<MPoly> MPoly::coeffs_in(VarId v) const {
  std::vector<std::vector<Term>> buckets(static_cast<size_t>(std::max(0, degree_in(v)) + 1));
  for (const auto& [m, c] : t_) buckets[static_cast<size_t>(m.degree_in(v))].emplace_back(m.without(v), c);
  std::vector<MPoly> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.push_back(from_terms(std::move(b)));
  return out;
}

MPoly MPoly::from_coeffs_in(VarId v, const std::vector<MPoly>& cs) {
  std::vector<Term> terms;
  for (size_t k = 0; k < cs.size(); ++k)
    for (const auto& [m, c] : cs[k].terms())
      terms.emplace_back(k == 0 ? m : m * Monomial::var(v, static_cast<int>(k)), c);
  return from_terms(std::move(terms));
}

MPoly MPoly::rename(const std::function<VarId(VarId)>& f) const {
  std::vector<Term> terms;
  terms.reserve(t_.size());
  for (const auto& [m, c] : t_) {
    std::vector<std::pair<VarId, int>> fs;
    for (const auto& [v, e] : m.factors()) fs.emplace_back(f(v), e);
    terms.emplace_back(Monomial(std::move(fs)), c);
  }
  return from_terms(std::move(terms));
}

MPoly MPoly::evaluate(const std::map<VarId, Rat>& point) const {
  std::vector<Term> terms;
  for (const auto& [m, c] : t_) {
    Rat coef = c;
    std::vector<std::pair<VarId, int>> rest;
    for (const auto& [v, e] : m.factors()) {
      auto it = point.find(v);
      if (it == point.end()) {
        rest.emplace_back(v, e);
      } else {
        Rat p;
        mpz_pow_ui(p.get_num_mpz_t(), it->second.get_num_mpz_t(), static_cast<unsigned long>(e));
        mpz_pow_ui(p.get_den_mpz_t(), it->second.get_den_mpz_t(), static_cast<unsigned long>(e));
        coef *= p;
      }
    }
    if (coef != 0) terms.emplace_back(Monomial(std::move(rest)), coef);
  }
  return from_terms(std::move(terms));
}

Monomial MPoly::monomial_content() const {
  if (t_.empty()) return {};
  Monomial g = t_[0].first;
  for (size_t i = 1; i < t_.size() && !g.is_one(); ++i) g = g.gcd(t_[i].first);
  return g;
}

MPoly MPoly::monic() const {
  if (is_zero()) return *this;
  return *this * Rat(1 / leading_coeff());
}

std::string MPoly::str(const VarNamer& namer) const {
  if (t_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : t_) {
    Rat a = abs(c);
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    bool unit = a == 1;
    if (!unit || m.is_one()) os << a.get_str();
    bool need_star = !unit;
    for (const auto& [v, e] : m.factors()) {
      if (need_star) os << "*";
      os << namer(v);
      if (e > 1) os << "^" << e;
      need_star = true;
    }
  }
  return os.str();
}

bool operator==(const MPoly& a, const MPoly& b) {
  if (a.t_.size() != b.t_.size()) return false;
  for (size_t i = 0; i < a.t_.size(); ++i)
    if (!(a.t_[i].first == b.t_[i].first) || a.t_[i].second != b.t_[i].second) return false;
  return true;
}

// ---- gcd ----------------------------------------------------------------------

namespace {

MPoly divide_monomial(const MPoly& p, const Monomial& m) {
  if (m.is_one()) return p;
  std::vector<MPoly::Term> terms;
  for (const auto& [mm, c] : p.terms()) terms.emplace_back(*mm.divide(m), c);
  return MPoly::from_terms(std::move(terms));
}

MPoly gcd_nomon(const MPoly& a, const MPoly& b);

// Content with respect to v: gcd of the coefficients of powers of v.
MPoly content_in(const MPoly& p, VarId v) {
  MPoly g;
  for (const auto& c : p.coeffs_in(v)) {
    if (c.is_zero()) continue;
    g = gcd(g, c);
    if (g.is_constant()) return MPoly(Rat(1));
  }
  return g;
}

MPoly primitive_in(const MPoly& p, VarId v) {
  MPoly c = content_in(p, v);
  return c.is_constant() ? p.monic() : p.exact_div(c).monic();
}

MPoly pseudo_rem(const MPoly& a, const MPoly& b, VarId v) {
  std::vector<MPoly> r = a.coeffs_in(v);
  const std::vector<MPoly> bc = b.coeffs_in(v);
  const size_t db = bc.size() - 1;
  const MPoly& lb = bc.back();
  while (r.size() > db && !(r.size() == 1 && r[0].is_zero())) {
    const size_t dr = r.size() - 1;
    MPoly lr = r.back();
    for (auto& c : r) c = c * lb;
    for (size_t k = 0; k <= db; ++k) r[dr - db + k] -= lr * bc[k];
    while (r.size() > 1 && r.back().is_zero()) r.pop_back();
    if (r.size() - 1 >= dr && !r.back().is_zero()) throw std::logic_error("pseudo-remainder failed to reduce");
    if (r.size() == 1) break;
  }
  return MPoly::from_coeffs_in(v, r);
}

MPoly gcd_nomon(const MPoly& a, const MPoly& b) {
  if (a.is_constant() || b.is_constant()) return MPoly(Rat(1));
  const auto va = a.variables();
  const auto vb = b.variables();
  for (VarId v : va)
    if (!std::binary_search(vb.begin(), vb.end(), v)) {
      MPoly g = b;
      for (const auto& c : a.coeffs_in(v)) {
        if (c.is_zero()) continue;
        g = gcd(g, c);
        if (g.is_constant()) return MPoly(Rat(1));
      }
      return g;
    }
  for (VarId v : vb)
    if (!std::binary_search(va.begin(), va.end(), v)) return gcd_nomon(b, a);

  VarId x = va.front();
  int best = a.degree_in(x) + b.degree_in(x);
  for (VarId v : va) {
    int d = a.degree_in(v) + b.degree_in(v);
    if (d < best) {
      best = d;
      x = v;
    }
  }
  MPoly ca = content_in(a, x), cb = content_in(b, x);
  MPoly c = gcd(ca, cb);
  MPoly pa = ca.is_constant() ? a : a.exact_div(ca);
  MPoly pb = cb.is_constant() ? b : b.exact_div(cb);
  if (pa.degree_in(x) < pb.degree_in(x)) std::swap(pa, pb);
  while (!pb.is_zero() && pb.degree_in(x) > 0) {
    MPoly r = pseudo_rem(pa, pb, x);
    pa = pb;
    pb = r.is_zero() ? r : primitive_in(r, x);
  }
  if (!pb.is_zero()) return c.monic();
  return (c * primitive_in(pa, x)).monic();
}

}  // namespace

namespace {

// Arithmetic modulo the Mersenne prime 2^61 - 1, used only to prove coprimality.
constexpr std::uint64_t kP = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(z & kP), hi = static_cast<std::uint64_t>(z >> 61);
  std::uint64_t r = lo + hi;
  return r >= kP ? r - kP : r;
}
std::uint64_t addmod(std::uint64_t a, std::uint64_t b) { return a + b >= kP ? a + b - kP : a + b; }
std::uint64_t submod(std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : a + kP - b; }
std::uint64_t powmod(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mulmod(r, a);
    a = mulmod(a, a);
    e >>= 1;
  }
  return r;
}
std::uint64_t invmod(std::uint64_t a) { return powmod(a, kP - 2); }

std::optional<std::uint64_t> rat_mod(const Rat& q) {
  Int n = q.get_num() % Int(static_cast<unsigned long>(kP));
  if (n < 0) n += Int(static_cast<unsigned long>(kP));
  Int d = q.get_den() % Int(static_cast<unsigned long>(kP));
  if (d == 0) return std::nullopt;
  return mulmod(static_cast<std::uint64_t>(n.get_ui()), invmod(static_cast<std::uint64_t>(d.get_ui())));
}

using UPoly = std::vector<std::uint64_t>;  // coefficient k of x^k

// Image of p as a univariate polynomial in x with every other variable sent to
// point(v).  nullopt when a coefficient denominator vanishes mod p.
std::optional<UPoly> image_in(const MPoly& p, VarId x, const std::function<std::uint64_t(VarId)>& point) {
  UPoly u(static_cast<size_t>(p.degree_in(x)) + 1, 0);
  for (const auto& [m, c] : p.terms()) {
    auto cm = rat_mod(c);
    if (!cm) return std::nullopt;
    std::uint64_t t = *cm;
    int ex = 0;
    for (const auto& [v, e] : m.factors()) {
      if (v == x) ex = e;
      else t = mulmod(t, powmod(point(v), static_cast<std::uint64_t>(e)));
    }
    u[static_cast<size_t>(ex)] = addmod(u[static_cast<size_t>(ex)], t);
  }
  return u;
}

void trim(UPoly& u) {
  while (!u.empty() && u.back() == 0) u.pop_back();
}

// Degree of gcd(a, b) over Z/p; both nonzero.
int ugcd_degree(UPoly a, UPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    if (a.size() < b.size()) std::swap(a, b);
    std::uint64_t inv = invmod(b.back());
    while (a.size() >= b.size() && !a.empty()) {
      std::uint64_t f = mulmod(a.back(), inv);
      size_t off = a.size() - b.size();
      for (size_t k = 0; k < b.size(); ++k) a[off + k] = submod(a[off + k], mulmod(f, b[k]));
      trim(a);
    }
    std::swap(a, b);
  }
  return static_cast<int>(a.size()) - 1;
}

// Sound coprimality test: if gcd(a, b) had positive degree in a shared
// variable x, every image with non-vanishing leading coefficients would too.
bool certainly_coprime(const MPoly& a, const MPoly& b) {
  const auto va = a.variables(), vb = b.variables();
  std::vector<VarId> common;
  std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(common));
  for (VarId x : common) {
    auto point = [](VarId v) {
      std::uint64_t h = static_cast<std::uint64_t>(v.gen) * 0x9E3779B97F4A7C15ull +
                        static_cast<std::uint64_t>(v.shift + 1000) * 0xC2B2AE3D27D4EB4Full;
      return (h % (kP - 3)) + 2;
    };
    auto ia = image_in(a, x, point), ib = image_in(b, x, point);
    if (!ia || !ib) return false;
    if (static_cast<int>(ia->size()) - 1 != a.degree_in(x) || ia->back() == 0) return false;
    if (static_cast<int>(ib->size()) - 1 != b.degree_in(x) || ib->back() == 0) return false;
    if (ugcd_degree(*ia, *ib) > 0) return false;
  }
  return true;
}

}  // namespace

MPoly gcd(const MPoly& a, const MPoly& b) {
  if (a.is_zero()) return b.monic();
  if (b.is_zero()) return a.monic();
  if (a.is_constant() || b.is_constant()) return MPoly(Rat(1));
  if (a == b) return a.monic();
  Monomial ma = a.monomial_content(), mb = b.monomial_content();
  Monomial m = ma.gcd(mb);
  MPoly a1 = divide_monomial(a, ma), b1 = divide_monomial(b, mb);
  if (certainly_coprime(a1, b1)) return MPoly::monomial(m, Rat(1));
  MPoly g = gcd_nomon(a1, b1);
  return g.mul_monomial(m).monic();
}

// ---- RatFunc ------------------------------------------------------------------

RatFunc RatFunc::normalize(const MPoly& num, const MPoly& den) {
  if (den.is_zero()) throw std::domain_error("division by zero");
  if (num.is_zero()) return RatFunc();
  if (den.is_constant()) return RatFunc(num * Rat(1 / den.constant_value()), MPoly(Rat(1)), true);
  MPoly g = gcd(num, den);
  MPoly n = g.is_constant() ? num : num.exact_div(g);
  MPoly d = g.is_constant() ? den : den.exact_div(g);
  Rat lc = 1 / d.leading_coeff();
  return RatFunc(n * lc, d * lc, true);
}

Rat RatFunc::constant_value() const {
  if (!is_constant()) throw std::logic_error("rational function is not constant");
  return num_.constant_value() / den_.constant_value();
}

std::vector<VarId> RatFunc::variables() const {
  auto a = num_.variables();
  auto b = den_.variables();
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

RatFunc RatFunc::operator-() const { return RatFunc(-num_, den_, true); }

RatFunc RatFunc::operator+(const RatFunc& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  if (is_polynomial() && o.is_polynomial()) return RatFunc(num_ + o.num_, den_, true);
  // (n + p*d)/d stays reduced when p is a polynomial.
  if (o.is_polynomial()) return RatFunc(num_ + o.num_ * den_, den_, true);
  if (is_polynomial()) return RatFunc(o.num_ + num_ * o.den_, o.den_, true);
  // Henrici: only factors of gcd(den, o.den) can cancel.
  MPoly g = gcd(den_, o.den_);
  if (g.is_constant()) return RatFunc(num_ * o.den_ + o.num_ * den_, den_ * o.den_, true);
  MPoly a = den_.exact_div(g), b = o.den_.exact_div(g);
  MPoly t = num_ * b + o.num_ * a;
  if (t.is_zero()) return RatFunc();
  MPoly g2 = gcd(t, g);
  if (!g2.is_constant()) {
    t = t.exact_div(g2);
    b = o.den_.exact_div(g2);
  } else {
    b = o.den_;
  }
  MPoly d = a * b;
  Rat lc = 1 / d.leading_coeff();
  return RatFunc(t * lc, d * lc, true);
}

RatFunc RatFunc::operator-(const RatFunc& o) const { return *this + (-o); }

RatFunc RatFunc::operator*(const RatFunc& o) const {
  if (is_zero() || o.is_zero()) return RatFunc();
  if (is_polynomial() && o.is_polynomial()) return RatFunc(num_ * o.num_, den_, true);
  MPoly g1 = gcd(num_, o.den_), g2 = gcd(o.num_, den_);
  MPoly n1 = g1.is_constant() ? num_ : num_.exact_div(g1);
  MPoly d2 = g1.is_constant() ? o.den_ : o.den_.exact_div(g1);
  MPoly n2 = g2.is_constant() ? o.num_ : o.num_.exact_div(g2);
  MPoly d1 = g2.is_constant() ? den_ : den_.exact_div(g2);
  MPoly d = d1 * d2;
  Rat lc = 1 / d.leading_coeff();
  return RatFunc(n1 * n2 * lc, d * lc, true);
}

RatFunc RatFunc::inverse() const {
  if (is_zero()) throw std::domain_error("division by zero");
  Rat lc = 1 / num_.leading_coeff();
  return RatFunc(den_ * lc, num_ * lc, true);
}

RatFunc RatFunc::operator/(const RatFunc& o) const { return *this * o.inverse(); }

RatFunc RatFunc::pow(int e) const {
  if (e < 0) return inverse().pow(-e);
  return RatFunc(num_.pow(static_cast<unsigned>(e)), den_.pow(static_cast<unsigned>(e)), true);
}

RatFunc RatFunc::evaluate(const std::map<VarId, Rat>& point) const {
  MPoly d = den_.evaluate(point);
  if (d.is_zero()) throw PoleHit();
  return normalize(num_.evaluate(point), d);
}

std::pair<MPoly, MPoly> substitute_poly(const MPoly& p, const std::map<VarId, RatFunc>& images) {
  struct Powers {
    const RatFunc* img;
    int deg;
    std::vector<MPoly> num, den;
  };
  std::map<VarId, Powers> pw;
  for (VarId v : p.variables()) {
    auto it = images.find(v);
    if (it == images.end()) continue;
    Powers w{&it->second, p.degree_in(v), {}, {}};
    w.num.push_back(MPoly(Rat(1)));
    w.den.push_back(MPoly(Rat(1)));
    for (int k = 1; k <= w.deg; ++k) {
      w.num.push_back(w.num.back() * it->second.num());
      w.den.push_back(w.den.back() * it->second.den());
    }
    pw.emplace(v, std::move(w));
  }
  MPoly total;
  MPoly common(Rat(1));
  for (const auto& [v, w] : pw) common = common * w.den.back();
  std::vector<MPoly::Term> plain;
  for (const auto& [m, c] : p.terms()) {
    MPoly term(c);
    std::vector<std::pair<VarId, int>> rest;
    for (const auto& [v, e] : m.factors()) {
      auto it = pw.find(v);
      if (it == pw.end()) rest.emplace_back(v, e);
      else term = term * it->second.num[static_cast<size_t>(e)];
    }
    for (const auto& [v, w] : pw) {
      int e = m.degree_in(v);
      if (w.deg - e > 0) term = term * w.den[static_cast<size_t>(w.deg - e)];
    }
    total += term.mul_monomial(Monomial(std::move(rest)));
  }
  return {total, common};
}

RatFunc RatFunc::substitute(const std::map<VarId, RatFunc>& images) const {
  bool touches = false;
  for (VarId v : variables())
    if (images.count(v)) touches = true;
  if (!touches) return *this;
  auto [pn, ln] = substitute_poly(num_, images);
  auto [pd, ld] = substitute_poly(den_, images);
  if (pd.is_zero()) throw PoleHit();
  return normalize(pn * ld, pd * ln);
}

RatFunc RatFunc::rename(const std::function<VarId(VarId)>& f) const {
  return normalize(num_.rename(f), den_.rename(f));
}

std::string RatFunc::str(const VarNamer& namer) const {
  if (is_polynomial()) return num_.str(namer);
  std::string n = num_.str(namer);
  if (num_.terms().size() > 1) n = "(" + n + ")";
  std::string d = den_.str(namer);
  if (den_.terms().size() > 1) d = "(" + d + ")";
  return n + "/" + d;
}

// ---- linear algebra -----------------------------------------------------------

namespace {
using Row = SparseEchelon::Row;

// row += f * other
void axpy(Row& row, const Rat& f, const Row& other) {
  Row out;
  out.reserve(row.size() + other.size());
  size_t i = 0, j = 0;
  while (i < row.size() || j < other.size()) {
    if (j == other.size() || (i < row.size() && row[i].first < other[j].first)) {
      out.push_back(std::move(row[i++]));
    } else if (i == row.size() || other[j].first < row[i].first) {
      out.emplace_back(other[j].first, f * other[j].second);
      ++j;
    } else {
      Rat s = row[i].second + f * other[j].second;
      if (s != 0) out.emplace_back(row[i].first, std::move(s));
      ++i;
      ++j;
    }
  }
  row = std::move(out);
}
}  // namespace

void SparseEchelon::reduce(Row& row) const {
  while (!row.empty()) {
    auto it = pivots_.find(row.front().first);
    if (it == pivots_.end()) return;
    Rat f = -row.front().second;
    axpy(row, f, it->second);
  }
}

bool SparseEchelon::insert(Row row) {
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::erase_if(row, [](const auto& e) { return e.second == 0; });
  reduce(row);
  if (row.empty()) return false;
  Rat inv = 1 / row.front().second;
  for (auto& e : row) e.second *= inv;
  int col = row.front().first;
  pivots_.emplace(col, std::move(row));
  return true;
}

std::optional<RatVec> solve_sparse(int ncols, const std::vector<SparseEchelon::Row>& rows,
                                   const RatVec& rhs) {
  SparseEchelon ech(ncols + 1);
  for (size_t r = 0; r < rows.size(); ++r) {
    Row row = rows[r];
    if (rhs[r] != 0) row.emplace_back(ncols, rhs[r]);
    ech.insert(std::move(row));
  }
  if (ech.has_pivot(ncols)) return std::nullopt;
  RatVec x(static_cast<size_t>(ncols));
  const auto& piv = ech.pivots();
  for (auto it = piv.rbegin(); it != piv.rend(); ++it) {
    Rat v = 0;
    for (size_t k = 1; k < it->second.size(); ++k) {
      const auto& [c, a] = it->second[k];
      if (c == ncols) v += a;
      else v -= a * x[static_cast<size_t>(c)];
    }
    x[static_cast<size_t>(it->first)] = v;
  }
  return x;
}

namespace {
// In-place reduced row echelon form; returns pivot columns.
std::vector<int> rref(std::vector<RatVec>& a, int ncols) {
  std::vector<int> piv;
  size_t r = 0;
  for (int c = 0; c < ncols && r < a.size(); ++c) {
    size_t p = r;
    while (p < a.size() && a[p][static_cast<size_t>(c)] == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[r], a[p]);
    Rat inv = 1 / a[r][static_cast<size_t>(c)];
    for (auto& v : a[r]) v *= inv;
    for (size_t i = 0; i < a.size(); ++i) {
      if (i == r || a[i][static_cast<size_t>(c)] == 0) continue;
      Rat f = a[i][static_cast<size_t>(c)];
      for (size_t j = 0; j < static_cast<size_t>(ncols); ++j) a[i][j] -= f * a[r][j];
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}
}  // namespace

std::vector<RatVec> kernel(const std::vector<RatVec>& a, int ncols) {
  std::vector<RatVec> m = a;
  auto piv = rref(m, ncols);
  std::vector<bool> is_piv(static_cast<size_t>(ncols), false);
  for (int c : piv) is_piv[static_cast<size_t>(c)] = true;
  std::vector<RatVec> basis;
  for (int f = 0; f < ncols; ++f) {
    if (is_piv[static_cast<size_t>(f)]) continue;
    RatVec v(static_cast<size_t>(ncols));
    v[static_cast<size_t>(f)] = 1;
    for (size_t r = 0; r < piv.size(); ++r) v[static_cast<size_t>(piv[r])] = -m[r][static_cast<size_t>(f)];
    basis.push_back(std::move(v));
  }
  return basis;
}

int rank(std::vector<RatVec> a) {
  if (a.empty()) return 0;
  return static_cast<int>(rref(a, static_cast<int>(a[0].size())).size());
}

namespace {
void make_primitive_integer(RatVec& v) {
  Int l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  Int g = 0;
  for (auto& q : v) {
    q *= l;
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), q.get_num_mpz_t());
  }
  if (g == 0) return;
  bool neg = false;
  for (const auto& q : v)
    if (q != 0) {
      neg = q < 0;
      break;
    }
  for (auto& q : v) {
    q /= g;
    if (neg) q = -q;
  }
}
}  // namespace

namespace {
// Coefficient matrix of the elements over a common denominator: one row per
// monomial, one column per element.
std::vector<RatVec> coefficient_matrix(const std::vector<RatFunc>& elements) {
  if (elements.empty()) throw std::invalid_argument("linear_relations needs a nonempty list");
  MPoly l(Rat(1));
  for (const auto& e : elements) {
    MPoly g = gcd(l, e.den());
    l = l * (g.is_constant() ? e.den() : e.den().exact_div(g));
  }
  std::map<Monomial, size_t, MonomialLess> rows;
  std::vector<RatVec> mat;
  const size_t k = elements.size();
  for (size_t i = 0; i < k; ++i) {
    MPoly n = elements[i].num() * l.exact_div(elements[i].den());
    for (const auto& [m, c] : n.terms()) {
      auto [it, fresh] = rows.try_emplace(m, mat.size());
      if (fresh) mat.emplace_back(k);
      mat[it->second][i] = c;
    }
  }
  return mat;
}
}  // namespace

std::vector<RatVec> linear_relations(const std::vector<RatFunc>& elements) {
  auto mat = coefficient_matrix(elements);
  auto basis = kernel(mat, static_cast<int>(elements.size()));
  for (auto& v : basis) make_primitive_integer(v);
  return basis;
}

std::vector<std::vector<Int>> integer_kernel(const std::vector<RatVec>& a, int ncols) {
  const auto n = static_cast<size_t>(ncols);
  std::vector<std::vector<Int>> rows;
  for (const auto& r : a) {
    Int l = 1;
    for (const auto& q : r) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
    std::vector<Int> ir(n);
    for (size_t j = 0; j < n; ++j) ir[j] = Int(r[j] * Rat(l));
    rows.push_back(std::move(ir));
  }
  // Unimodular column operations, mirrored on u, bring each row to a single
  // nonzero entry at the next pivot column; the trailing columns of u span the
  // kernel.
  std::vector<std::vector<Int>> u(n, std::vector<Int>(n));
  for (size_t j = 0; j < n; ++j) u[j][j] = 1;
  auto col_op = [&](size_t dst, size_t src, const Int& q) {  // col dst -= q * col src
    for (auto& r : rows) r[dst] -= q * r[src];
    for (auto& r : u) r[dst] -= q * r[src];
  };
  auto swap_cols = [&](size_t x, size_t y) {
    for (auto& r : rows) std::swap(r[x], r[y]);
    for (auto& r : u) std::swap(r[x], r[y]);
  };
  size_t piv = 0;
  for (auto& row : rows) {
    if (piv == n) break;
    for (;;) {
      size_t best = n;
      for (size_t c = piv; c < n; ++c)
        if (row[c] != 0 && (best == n || abs(row[c]) < abs(row[best]))) best = c;
      if (best == n) break;
      bool done = true;
      for (size_t c = piv; c < n; ++c) {
        if (c == best || row[c] == 0) continue;
        Int q;
        mpz_fdiv_q(q.get_mpz_t(), row[c].get_mpz_t(), row[best].get_mpz_t());
        col_op(c, best, q);
        if (row[c] != 0) done = false;
      }
      if (done) {
        swap_cols(piv, best);
        ++piv;
        break;
      }
    }
  }
  std::vector<std::vector<Int>> out;
  for (size_t c = piv; c < n; ++c) {
    std::vector<Int> v(n);
    for (size_t r = 0; r < n; ++r) v[r] = u[r][c];
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<Int>> integer_relations(const std::vector<RatFunc>& elements) {
  return integer_kernel(coefficient_matrix(elements), static_cast<int>(elements.size()));
}

// ---- circle -------------------------------------------------------------------

CircleValue::CircleValue(const Rat& angle) {
  Int fl;
  mpz_fdiv_q(fl.get_mpz_t(), angle.get_num_mpz_t(), angle.get_den_mpz_t());
  a_ = angle - Rat(fl);
  a_.canonicalize();
}

}  // namespace dfield
