#include "dfield/systems.hpp"

#include <algorithm>
#include <sstream>

namespace dfield {

IndexSet hat(int n, std::initializer_list<int> drop) {
  IndexSet w = full_set(n);
  for (int i : drop) w &= ~index_bit(i);
  return w;
}

std::string index_set_str(IndexSet w) {
  std::string s = "{";
  bool first = true;
  for (int i = 1; w >> (i - 1); ++i) {
    if (!(w & index_bit(i))) continue;
    if (!first) s += ",";
    s += std::to_string(i);
    first = false;
  }
  return s + "}";
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

bool subset(IndexSet a, IndexSet b) { return (a & ~b) == 0; }

}  // namespace

SystemError::SystemError(const std::vector<std::string>& d) : std::invalid_argument(join(d)), diagnostics(d) {}

// ---- the model -----------------------------------------------------------------

IndexSet SystemModel::label(int id) const {
  auto it = labels.find(id);
  if (it == labels.end()) throw std::invalid_argument("generator id " + std::to_string(id) + " has no label");
  return it->second;
}

std::vector<int> SystemModel::block(int i) const {
  std::vector<int> out;
  for (const auto& [id, w] : labels)
    if (w == index_bit(i)) out.push_back(id);
  return out;
}

std::set<int> SystemModel::corner_ids(IndexSet w) const {
  std::set<int> out;
  for (const auto& [id, l] : labels)
    if (subset(l, w)) out.insert(id);
  return out;
}

Presentation SystemModel::corner(IndexSet w) const { return full.restrict_to(corner_ids(w)); }

IndexSet SystemModel::support(const Element& x) const {
  IndexSet s = 0;
  for (VarId v : x.variables()) s |= label(v.gen);
  return s;
}

bool SystemModel::in_corner(const Element& x, IndexSet w) const { return subset(support(x), w); }

std::vector<std::string> SystemModel::validate() const {
  std::vector<std::string> out = full.validate();
  for (const auto& g : full.generators()) {
    auto it = labels.find(g.id);
    if (it == labels.end()) {
      out.push_back("generator '" + g.name + "' has no label");
      continue;
    }
    if (!subset(it->second, full_set(n))) out.push_back("generator '" + g.name + "' labelled outside 1.." + std::to_string(n));
    if (!g.is_free() && !(in_corner(g.linear, it->second) && in_corner(g.constant, it->second)))
      out.push_back("generator '" + g.name + "': rule leaves corner " + index_set_str(it->second));
  }
  for (int i = 1; i <= n; ++i)
    if (block(i).empty()) out.push_back("block " + std::to_string(i) + " is empty");
  return out;
}

SystemModel build_system(const Presentation& base, const std::vector<BlockSpec>& blocks) {
  std::vector<std::string> diag = base.validate();
  if (blocks.size() > 31) throw SystemError({"at most 31 blocks are supported"});
  SystemModel m;
  m.full = base;
  m.n = static_cast<int>(blocks.size());
  for (const auto& g : base.generators()) m.labels[g.id] = 0;
  std::map<std::string, int> seen;
  for (size_t b = 0; b < blocks.size(); ++b) {
    int i = static_cast<int>(b) + 1;
    if (blocks[b].empty()) diag.push_back("block " + std::to_string(i) + " is empty");
    for (const auto& g : blocks[b]) {
      if (base.find(g.name)) {
        diag.push_back("generator '" + g.name + "' in block " + std::to_string(i) + " already belongs to the base");
        continue;
      }
      if (auto it = seen.find(g.name); it != seen.end()) {
        diag.push_back("generator '" + g.name + "' appears in blocks " + std::to_string(it->second) + " and " +
                       std::to_string(i));
        continue;
      }
      seen[g.name] = i;
      if (g.kind == GeneratorSpec::Kind::Affine && !(base.contains(g.alpha) && base.contains(g.beta))) {
        diag.push_back("generator '" + g.name + "' in block " + std::to_string(i) + ": rule is not over the base");
        continue;
      }
      try {
        int id = g.kind == GeneratorSpec::Kind::Free ? m.full.add_free(g.name)
                                                     : m.full.add_affine(g.name, g.alpha, g.beta);
        m.labels[id] = index_bit(i);
      } catch (const std::invalid_argument& e) {
        diag.push_back(e.what());
      }
    }
  }
  if (!diag.empty()) throw SystemError(diag);
  return m;
}

int attach_generator(SystemModel& m, const std::string& name, IndexSet w, const Element& alpha, const Element& beta) {
  if (!subset(w, full_set(m.n))) throw std::invalid_argument("label " + index_set_str(w) + " outside the system");
  if (!m.in_corner(alpha, w) || !m.in_corner(beta, w))
    throw std::invalid_argument("generator '" + name + "': rule leaves corner " + index_set_str(w));
  int id = m.full.add_affine(name, alpha, beta);
  m.labels[id] = w;
  return id;
}

SystemModel restrict_over_corner(const SystemModel& m, int i) {
  if (m.n < 2) throw std::invalid_argument("restriction needs a system of size at least 2");
  if (i < 1 || i > m.n) throw std::invalid_argument("corner index out of range");
  SystemModel r;
  r.full = m.full;
  r.n = m.n - 1;
  for (const auto& [id, w] : m.labels) {
    IndexSet out = 0;
    for (int j = 1; j <= m.n; ++j)
      if (j != i && (w & index_bit(j))) out |= index_bit(j < i ? j : j - 1);
    r.labels[id] = out;
  }
  return r;
}

// ---- equations and decompositions ------------------------------------------------

namespace {
std::string cname(int i, int j) { return "c^" + std::to_string(j) + "_w" + std::to_string(i); }
}  // namespace

std::vector<std::string> validate_equation(const SystemModel& m, const AdditiveEquation& eq) {
  std::vector<std::string> out;
  if (eq.height() != m.n)
    return {"height " + std::to_string(eq.height()) + " does not match system size " + std::to_string(m.n)};
  Element sum;
  for (int i = 1; i <= m.n; ++i) {
    const Element& b = eq.summands[static_cast<size_t>(i - 1)];
    if (!m.in_corner(b, hat(m.n, {i})))
      out.push_back("summand " + std::to_string(i) + " mentions block " + std::to_string(i));
    sum += b;
  }
  if (!sum.is_zero()) out.push_back("summands do not add up to zero");
  return out;
}

bool is_ff(const SystemModel& m, const AdditiveEquation& eq) {
  for (const auto& b : eq.summands)
    if (!m.full.is_fixed(b)) return false;
  return true;
}

ValidationReport validate_decomposition(const SystemModel& m, const AdditiveEquation& eq, const Decomposition& dec) {
  ValidationReport r;
  auto fail = [&](std::string s) {
    r.ok = false;
    r.diagnostics.push_back(std::move(s));
  };
  if (eq.height() != m.n) {
    fail("height does not match system size");
    return r;
  }
  for (int i = 1; i <= m.n; ++i)
    for (int j = 1; j <= m.n; ++j)
      if (i != j && !dec.c.count({i, j})) fail("missing " + cname(i, j));
  if (!r.ok) return r;
  for (int i = 1; i <= m.n; ++i) {
    Element sum;
    for (int j = 1; j <= m.n; ++j) {
      if (i == j) continue;
      const Element& c = dec.at(i, j);
      if (!m.in_corner(c, hat(m.n, {i, j})))
        fail("membership: " + cname(i, j) + " not in corner " + index_set_str(hat(m.n, {i, j})));
      if (i < j && c != -dec.at(j, i)) fail("antisymmetry: " + cname(i, j) + " != -" + cname(j, i));
      sum += c;
    }
    if (sum != eq.summands[static_cast<size_t>(i - 1)]) fail("recovery: row " + std::to_string(i));
  }
  return r;
}

Rat GenericPoints::draw(int attempt) {
  long bound = 4 + 4L * attempt;
  auto span = static_cast<std::uint64_t>(2 * bound + 1);
  return Rat(static_cast<long>(rng_() % span) - bound);
}

// ---- the algorithms, over a frame ------------------------------------------------
//
// A frame is a system restricted over the corners in `extra`: the active
// indices idx[0..k) play the role of 1..k and every corner implicitly
// contains `extra`.

namespace {

struct Frame {
  std::vector<int> idx;
  IndexSet extra = 0;
  size_t size() const { return idx.size(); }
  IndexSet all() const {
    IndexSet w = extra;
    for (int i : idx) w |= index_bit(i);
    return w;
  }
  IndexSet facet(size_t p) const { return all() & ~index_bit(idx[p]); }
  IndexSet pair(size_t p, size_t q) const { return facet(p) & ~index_bit(idx[q]); }
  // Drops the last active index into the base.
  Frame peel() const {
    Frame f{idx, extra | index_bit(idx.back())};
    f.idx.pop_back();
    return f;
  }
  Frame drop_last() const {
    Frame f{idx, extra};
    f.idx.pop_back();
    return f;
  }
};

using PairMap = std::map<std::pair<size_t, size_t>, Element>;

void require_in(const SystemModel& m, const Element& x, IndexSet w, const std::string& what) {
  if (!m.in_corner(x, w))
    throw std::logic_error(what + " leaves corner " + index_set_str(w) + ": " + m.full.str(x));
}

std::vector<Element> step1(const SystemModel& m, const Frame& fr, const std::vector<Element>& b, size_t p,
                           GenericPoints& pts) {
  IndexSet blk = index_bit(fr.idx[p]);
  std::set<VarId> vars;
  for (size_t q = 0; q < b.size(); ++q)
    if (q != p)
      for (VarId v : b[q].variables())
        if (m.label(v.gen) & blk) vars.insert(v);
  for (int attempt = 0; attempt < pts.budget(); ++attempt) {
    std::map<VarId, Rat> point;
    for (VarId v : vars) point[v] = pts.draw(attempt);
    std::vector<Element> d(b.size());
    try {
      for (size_t q = 0; q < b.size(); ++q)
        if (q != p) d[q] = -b[q].evaluate(point);
    } catch (const PoleHit&) {
      continue;
    }
    Element sum;
    for (size_t q = 0; q < b.size(); ++q)
      if (q != p) {
        require_in(m, d[q], fr.pair(p, q), "specialised term");
        sum += d[q];
      }
    if (sum != b[p]) throw std::logic_error("specialisation does not recover the summand");
    return d;
  }
  throw std::runtime_error("no generic point found");
}

PairMap decompose_frame(const SystemModel& m, const Frame& fr, const std::vector<Element>& b, GenericPoints& pts) {
  size_t k = fr.size();
  PairMap c;
  if (k < 2) throw std::invalid_argument("decomposition needs height at least 2");
  if (k == 2) {
    require_in(m, b[0], fr.extra, "height-2 summand");
    c[{0, 1}] = b[0];
    c[{1, 0}] = b[1];
    return c;
  }
  if (k == 3) {
    std::vector<std::vector<Element>> d(3);
    for (size_t p = 0; p < 3; ++p) d[p] = step1(m, fr, b, p, pts);
    Element delta[3];
    for (size_t i = 0; i < 3; ++i) {
      size_t j = (i + 1) % 3, l = (i + 2) % 3;
      delta[i] = d[j][l] + d[l][j];
      require_in(m, delta[i], fr.extra, "correction term");
    }
    if (!(delta[0] + delta[1] + delta[2]).is_zero()) throw std::logic_error("correction terms do not cancel");
    c[{2, 0}] = d[2][0];
    c[{2, 1}] = d[2][1];
    c[{1, 2}] = d[1][2] - delta[0];
    c[{1, 0}] = d[1][0] + delta[0];
    c[{0, 2}] = d[0][2] - delta[1];
    c[{0, 1}] = d[0][1] + delta[1];
    return c;
  }
  size_t last = k - 1;
  std::vector<Element> d = step1(m, fr, b, last, pts);
  std::vector<Element> e(last);
  for (size_t q = 0; q < last; ++q) {
    c[{last, q}] = d[q];
    c[{q, last}] = -d[q];
    e[q] = b[q] + d[q];
  }
  PairMap rec = decompose_frame(m, fr.peel(), e, pts);
  c.insert(rec.begin(), rec.end());
  return c;
}

Element ask(const SystemModel& m, const TorsorWitnessOracle& oracle, const Element& target, IndexSet w) {
  if (target.is_zero()) return Element();
  std::optional<Element> x = oracle(target, w);
  if (!x) throw WitnessUnavailable(target, w, m.full.str(target));
  if (!m.in_corner(*x, w) || m.full.wp(*x) != target) throw std::logic_error("oracle returned an invalid witness");
  return *x;
}

void wp_frame(const SystemModel& m, const Frame& fr, const std::vector<Element>& d, const TorsorWitnessOracle& oracle,
              GenericPoints& pts, PairMap& e, PairMap& wit) {
  size_t k = fr.size();
  if (k < 2) return;
  if (k == 2) {
    Element t = m.full.wp(d[0]);
    require_in(m, t, fr.extra, "height-2 torsor target");
    Element x = ask(m, oracle, t, fr.extra);
    e[{0, 1}] = t;
    e[{1, 0}] = -t;
    wit[{0, 1}] = x;
    wit[{1, 0}] = -x;
    return;
  }
  std::vector<Element> w(k);
  for (size_t q = 0; q < k; ++q) w[q] = m.full.wp(d[q]);
  PairMap f = decompose_frame(m, fr, w, pts);
  size_t last = k - 1;
  std::vector<Element> h(last);
  for (size_t q = 0; q < last; ++q) {
    const Element& t = f.at({last, q});
    Element x = ask(m, oracle, t, fr.pair(last, q));
    e[{last, q}] = t;
    e[{q, last}] = -t;
    wit[{last, q}] = x;
    wit[{q, last}] = -x;
    h[q] = d[q] + x;
  }
  wp_frame(m, fr.peel(), h, oracle, pts, e, wit);
}

PairMap ff_frame(const SystemModel& m, const Frame& fr, const std::vector<Element>& b, const TorsorWitnessOracle& oracle,
                 GenericPoints& pts) {
  size_t k = fr.size();
  if (k < 3) return decompose_frame(m, fr, b, pts);
  PairMap dec = decompose_frame(m, fr, b, pts);
  size_t last = k - 1;
  std::vector<Element> row(last);
  for (size_t q = 0; q < last; ++q) row[q] = dec.at({last, q});
  PairMap e, wit;
  wp_frame(m, fr.drop_last(), row, oracle, pts, e, wit);
  PairMap c;
  std::vector<Element> g(last);
  for (size_t q = 0; q < last; ++q) {
    Element x = row[q];
    for (size_t r = 0; r < last; ++r)
      if (r != q) x -= wit.at({q, r});
    if (!m.full.is_fixed(x)) throw std::logic_error("corrected term is not fixed: " + m.full.str(x));
    c[{last, q}] = x;
    c[{q, last}] = -x;
    g[q] = b[q] + x;
    if (!m.full.is_fixed(g[q])) throw std::logic_error("shifted summand is not fixed");
  }
  PairMap rec = ff_frame(m, fr.peel(), g, oracle, pts);
  c.insert(rec.begin(), rec.end());
  return c;
}

Frame top_frame(const SystemModel& m) {
  Frame f;
  for (int i = 1; i <= m.n; ++i) f.idx.push_back(i);
  return f;
}

Decomposition to_decomposition(const Frame& fr, const PairMap& c) {
  Decomposition d;
  for (const auto& [pq, x] : c) d.c[{fr.idx[pq.first], fr.idx[pq.second]}] = x;
  return d;
}

void require_valid(const SystemModel& m, const AdditiveEquation& eq) {
  auto diag = validate_equation(m, eq);
  if (!diag.empty()) throw std::invalid_argument("invalid additive equation: " + join(diag));
}

void check_output(const SystemModel& m, const AdditiveEquation& eq, const Decomposition& d) {
  auto r = validate_decomposition(m, eq, d);
  if (!r.ok) throw std::logic_error("decomposition failed validation: " + join(r.diagnostics));
}

}  // namespace

std::map<int, Element> specialise_step1(const SystemModel& m, const AdditiveEquation& eq, int i, GenericPoints& pts) {
  require_valid(m, eq);
  if (i < 1 || i > m.n) throw std::invalid_argument("corner index out of range");
  Frame fr = top_frame(m);
  auto d = step1(m, fr, eq.summands, static_cast<size_t>(i - 1), pts);
  std::map<int, Element> out;
  for (int j = 1; j <= m.n; ++j)
    if (j != i) out[j] = d[static_cast<size_t>(j - 1)];
  return out;
}

Decomposition decompose(const SystemModel& m, const AdditiveEquation& eq, GenericPoints& pts) {
  require_valid(m, eq);
  Frame fr = top_frame(m);
  Decomposition d = to_decomposition(fr, decompose_frame(m, fr, eq.summands, pts));
  check_output(m, eq, d);
  return d;
}

WitnessUnavailable::WitnessUnavailable(Element t, IndexSet w, const std::string& shown)
    : std::runtime_error("witness unavailable at T[" + shown + "] over corner " + index_set_str(w)),
      target(std::move(t)),
      corner(w) {}

WpSystem wp_decompose_with_witnesses(const SystemModel& m, const std::vector<Element>& d,
                                     const TorsorWitnessOracle& oracle, GenericPoints& pts) {
  if (static_cast<int>(d.size()) != m.n) throw std::invalid_argument("one term per facet expected");
  Frame fr = top_frame(m);
  Element sum;
  for (size_t q = 0; q < d.size(); ++q) {
    if (!m.in_corner(d[q], fr.facet(q))) throw std::invalid_argument("term " + std::to_string(q + 1) + " leaves its facet");
    sum += d[q];
  }
  if (!m.full.is_fixed(sum)) throw std::invalid_argument("terms must add up to a fixed element");
  PairMap e, wit;
  wp_frame(m, fr, d, oracle, pts, e, wit);
  WpSystem out{to_decomposition(fr, e), to_decomposition(fr, wit)};
  for (int i = 1; i <= m.n; ++i) {
    Element s;
    for (int k = 1; k <= m.n; ++k) {
      if (k == i) continue;
      const Element& x = out.e.at(i, k);
      if (x != -out.e.at(k, i) || m.full.wp(out.witnesses.at(i, k)) != x ||
          !m.in_corner(out.witnesses.at(i, k), hat(m.n, {i, k})))
        throw std::logic_error("torsor system failed verification");
      s += x;
    }
    if (s != m.full.wp(d[static_cast<size_t>(i - 1)])) throw std::logic_error("torsor system does not recover a row");
  }
  return out;
}

Decomposition ff_decompose_with_witnesses(const SystemModel& m, const AdditiveEquation& eq,
                                          const TorsorWitnessOracle& oracle, GenericPoints& pts) {
  require_valid(m, eq);
  if (!is_ff(m, eq)) throw std::invalid_argument("summands must be fixed");
  Frame fr = top_frame(m);
  Decomposition d = to_decomposition(fr, ff_frame(m, fr, eq.summands, oracle, pts));
  check_output(m, eq, d);
  for (const auto& [ij, c] : d.c)
    if (!m.full.is_fixed(c)) throw std::logic_error(cname(ij.first, ij.second) + " is not fixed");
  return d;
}

TorsorWitnessOracle bounded_search_oracle(const SystemModel& m, const SearchBounds& b) {
  return [m, b](const Element& target, IndexSet w) -> std::optional<Element> {
    SolveResult r = solve_twisted_bounded(m.corner(w), TwistedSAS{Element(1), target}, b);
    if (auto* s = std::get_if<Solution>(&r)) return s->x;
    return std::nullopt;
  };
}

// ---- bounded ff search -------------------------------------------------------------

std::vector<Element> fixed_spanning_set(const SystemModel& m, IndexSet w, const SearchBounds& b,
                                        const std::vector<Element>& hints) {
  return fixed_elements(m.corner(w), b, hints);
}

std::vector<Element> fixed_elements(const Presentation& p, const SearchBounds& b, const std::vector<Element>& hints) {
  std::vector<Element> usable;
  for (const auto& h : hints)
    if (p.contains(h)) usable.push_back(h);
  AnsatzSpace s = ansatz_space(p, usable, b);
  std::vector<Element> out;
  for (const auto& den : s.denominators) {
    CoefficientSystem sys = coefficient_system(p, Element(1), Element(), den, s.monomials);
    for (const auto& kv : column_kernel(sys)) {
      std::vector<MPoly::Term> terms;
      for (size_t i = 0; i < kv.size(); ++i)
        if (kv[i] != 0) terms.emplace_back(s.monomials[i], kv[i]);
      Element x = RatFunc::normalize(MPoly::from_terms(std::move(terms)), den);
      if (!x.is_zero() && std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    }
  }
  return out;
}

namespace {
MPoly lcm(const MPoly& a, const MPoly& b) { return a * b.exact_div(gcd(a, b)); }
}  // namespace

FfSearchResult ff_decompose_bounded(const SystemModel& m, const AdditiveEquation& eq, const SearchBounds& b) {
  require_valid(m, eq);
  if (!is_ff(m, eq)) throw std::invalid_argument("summands must be fixed");
  int n = m.n;
  std::map<std::pair<int, int>, std::vector<Element>> span;
  std::map<std::pair<int, int>, int> offset;
  int nvars = 0;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      span[{i, j}] = fixed_spanning_set(m, hat(n, {i, j}), b, eq.summands);
      offset[{i, j}] = nvars;
      nvars += static_cast<int>(span[{i, j}].size());
    }
  std::vector<SparseEchelon::Row> rows;
  RatVec rhs;
  for (int i = 1; i <= n; ++i) {
    const Element& bi = eq.summands[static_cast<size_t>(i - 1)];
    MPoly L = bi.den();
    for (int j = 1; j <= n; ++j)
      if (j != i)
        for (const auto& s : span[{std::min(i, j), std::max(i, j)}]) L = lcm(L, s.den());
    std::map<Monomial, std::map<int, Rat>, MonomialLess> eqs;
    std::map<Monomial, Rat, MonomialLess> target;
    MPoly scaled_b = bi.num() * L.exact_div(bi.den());
    for (const auto& [mono, c] : scaled_b.terms()) target[mono] = c;
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      auto key = std::make_pair(std::min(i, j), std::max(i, j));
      Rat sign = i < j ? 1 : -1;
      const auto& sp = span[key];
      for (size_t k = 0; k < sp.size(); ++k) {
        int col = offset[key] + static_cast<int>(k);
        MPoly scaled = sp[k].num() * L.exact_div(sp[k].den());
        for (const auto& [mono, c] : scaled.terms()) eqs[mono][col] += sign * c;
      }
    }
    for (const auto& [mono, c] : target) eqs[mono];
    for (const auto& [mono, cols] : eqs) {
      SparseEchelon::Row r;
      for (const auto& [col, c] : cols)
        if (c != 0) r.emplace_back(col, c);
      auto t = target.find(mono);
      Rat v = t == target.end() ? Rat(0) : t->second;
      if (r.empty() && v == 0) continue;
      rows.push_back(std::move(r));
      rhs.push_back(v);
    }
  }
  auto sol = solve_sparse(nvars, rows, rhs);
  if (!sol) {
    NotFoundWithinBounds nf{b, {}};
    for (const auto& [key, sp] : span) nf.span_sizes[key] = static_cast<int>(sp.size());
    return nf;
  }
  Decomposition d;
  for (const auto& [key, sp] : span) {
    Element x;
    for (size_t k = 0; k < sp.size(); ++k) {
      const Rat& a = (*sol)[static_cast<size_t>(offset[key]) + k];
      if (a != 0) x += Element(a) * sp[k];
    }
    d.c[key] = x;
    d.c[{key.second, key.first}] = -x;
  }
  check_output(m, eq, d);
  return d;
}

}  // namespace dfield
