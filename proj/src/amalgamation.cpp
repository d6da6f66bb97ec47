#include "dfield/amalgamation.hpp"

#include <algorithm>

namespace dfield {

std::string Obstruction::str(const Presentation& p) const {
  std::string s;
  for (size_t i = 0; i < relation.size(); ++i) {
    if (relation[i] == 0) continue;
    std::string c = relation[i].get_str();
    if (!s.empty()) s += c[0] == '-' ? " - " : " + ";
    else if (c[0] == '-') s += "-";
    if (c[0] == '-') c = c.substr(1);
    s += (c == "1" ? "" : c + "*") + "Psi(" + p.str(elements[i]) + ")";
  }
  return s + " = " + rat_str(angle_sum) + " (mod 1)";
}

std::optional<Obstruction> find_inconsistency(const std::vector<CharacterEntry>& entries) {
  if (entries.empty()) return std::nullopt;
  std::vector<Element> els;
  for (const auto& e : entries) els.push_back(e.element);
  for (const auto& z : integer_relations(els)) {
    Rat s = 0;
    for (size_t i = 0; i < z.size(); ++i) s += Rat(z[i]) * entries[i].value.angle();
    CircleValue v(s);
    if (!v.is_identity()) return Obstruction{els, z, v.angle()};
  }
  return std::nullopt;
}

namespace {

void require_fixed(const Presentation& p, const Element& x) {
  if (!p.is_fixed(x)) throw std::invalid_argument("element is not fixed: " + p.str(x));
}

// Smallest d > 0 and a lattice vector w with w.back() = d (d = 0 when every
// relation has a zero last coordinate).
std::pair<Int, std::vector<Int>> last_coordinate_gcd(const std::vector<std::vector<Int>>& lat, size_t n) {
  std::vector<Int> acc(n);
  Int g = 0;
  for (const auto& v : lat) {
    const Int& c = v.back();
    if (c == 0) continue;
    if (g == 0) {
      acc = v;
      g = c;
      continue;
    }
    Int d, s, t;
    mpz_gcdext(d.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    for (size_t i = 0; i < n; ++i) acc[i] = s * acc[i] + t * v[i];
    g = d;
  }
  if (g < 0) {
    g = -g;
    for (auto& a : acc) a = -a;
  }
  return {g, acc};
}

QueryOutcome value_freely(const std::vector<CharacterEntry>& cur, const Element& x) {
  std::vector<Element> els;
  for (const auto& e : cur) els.push_back(e.element);
  els.push_back(x);
  auto [d, w] = last_coordinate_gcd(integer_relations(els), els.size());
  QueryOutcome out;
  if (d == 0) {
    out.kind = QueryOutcome::Kind::Free;
    return out;
  }
  Rat s = 0;
  for (size_t i = 0; i < cur.size(); ++i) s += Rat(w[i]) * cur[i].value.angle();
  out.value = CircleValue(CircleValue(-s).angle() / Rat(d));
  out.kind = d == 1 ? QueryOutcome::Kind::Forced : QueryOutcome::Kind::Constrained;
  out.choices = d;
  return out;
}

}  // namespace

ExtendResult extend_character(const CharacterTable& t, const std::vector<CharacterQuery>& queries) {
  for (const auto& e : t.entries) require_fixed(t.presentation, e.element);
  for (const auto& q : queries) require_fixed(t.presentation, q.element);
  if (auto ob = find_inconsistency(t.entries)) return *ob;
  Extended out{t, {}};
  auto& cur = out.table.entries;
  for (const auto& q : queries) {
    if (q.desired) {
      cur.push_back({q.element, *q.desired});
      if (auto ob = find_inconsistency(cur)) return *ob;
      out.outcomes.push_back({QueryOutcome::Kind::Assigned, *q.desired, 1});
      continue;
    }
    QueryOutcome o = value_freely(cur, q.element);
    cur.push_back({q.element, o.value});
    out.outcomes.push_back(o);
  }
  return out;
}

std::optional<CircleValue> forced_value(const CharacterTable& t, const Element& x) {
  QueryOutcome o = value_freely(t.entries, x);
  if (o.kind != QueryOutcome::Kind::Forced) return std::nullopt;
  return o.value;
}

std::variant<ProductVerdict, Obstruction> product_condition(const CharacterTable& t, const SystemModel& m,
                                                            const AdditiveEquation& eq, const Decomposition& dec) {
  if (auto ob = find_inconsistency(t.entries)) return *ob;
  auto need = [&](const Element& x) {
    auto v = forced_value(t, x);
    if (!v) throw std::invalid_argument("insufficient table");
    return *v;
  };
  ProductVerdict out;
  Rat total = 0;
  for (int i = 1; i <= m.n; ++i) {
    CircleValue bi = need(eq.summands[static_cast<size_t>(i - 1)]);
    CircleValue sum;
    for (int j = 1; j <= m.n; ++j)
      if (j != i) sum = sum + need(dec.at(i, j));
    if (!(sum == bi)) throw std::logic_error("consistent table breaks a recovery relation");
    out.justification.push_back("Psi(b_w" + std::to_string(i) + ") = " + rat_str(bi.angle()) +
                                " = sum over j of Psi(c^j_w" + std::to_string(i) + ")");
    total += bi.angle();
  }
  for (int i = 1; i <= m.n; ++i)
    for (int j = i + 1; j <= m.n; ++j)
      if (!(need(dec.at(i, j)) + need(dec.at(j, i))).is_identity())
        throw std::logic_error("consistent table breaks antisymmetry");
  out.justification.push_back("Psi(c^j_wi) + Psi(c^i_wj) = 0 for every pair, so the row sums telescope");
  out.angle_sum = CircleValue(total).angle();
  out.holds = out.angle_sum == 0;
  return out;
}

std::optional<HyperplaneWitness> hyperplane_search(const std::vector<Element>& x, int height,
                                                   const std::vector<Element>& subfield_span) {
  if (height < 1) throw std::invalid_argument("height must be at least 1");
  const size_t n = x.size();
  if (n == 0) return std::nullopt;
  std::vector<Element> all = x;
  all.insert(all.end(), subfield_span.begin(), subfield_span.end());
  std::vector<RatVec> proj;
  for (const auto& r : linear_relations(all)) proj.emplace_back(r.begin(), r.begin() + static_cast<long>(n));
  if (rank(proj) == 0) return std::nullopt;
  std::vector<RatVec> complement = kernel(proj, static_cast<int>(n));

  // Entries ordered 0, 1, -1, 2, -2, ...; tuples by max norm.
  std::vector<long> order{0};
  for (long v = 1; v <= height; ++v) {
    order.push_back(v);
    order.push_back(-v);
  }
  std::vector<long> z(n);
  for (long r = 1; r <= height; ++r) {
    size_t span = static_cast<size_t>(2 * r + 1);
    std::vector<size_t> pos(n, 0);
    for (;;) {
      long mx = 0;
      long first = 0;
      for (size_t i = 0; i < n; ++i) {
        z[i] = order[pos[i]];
        mx = std::max(mx, std::abs(z[i]));
        if (first == 0) first = z[i];
      }
      if (mx == r && first > 0) {
        bool in = true;
        for (const auto& c : complement) {
          Rat s = 0;
          for (size_t i = 0; i < n; ++i) s += c[i] * Rat(z[i]);
          if (s != 0) {
            in = false;
            break;
          }
        }
        if (in) {
          Element b;
          for (size_t i = 0; i < n; ++i) b += x[i] * Element(Rat(z[i]));
          return HyperplaneWitness{z, b};
        }
      }
      size_t k = n;
      while (k > 0 && ++pos[k - 1] == span) pos[--k] = 0;
      if (k == 0) break;
    }
  }
  return std::nullopt;
}

ThreeAmalgInstance build_3amalg_obstruction(const Presentation& p, const Element& a, const AvoidedRegistry* registry,
                                            const Certificate* certificate, const CircleValue& r12,
                                            const CircleValue& r13, const CircleValue& r23) {
  if (!certificate) throw std::invalid_argument("refused: no certificate that T[" + p.str(a) + "] is unrealised");
  std::string why;
  if (!replay_certificate(p, TwistedSAS{Element(1), a}, registry, *certificate, &why))
    throw std::invalid_argument("refused: certificate does not replay: " + why);
  ThreeAmalgInstance out;
  out.presentation = p;
  std::vector<Element> alpha;
  for (int i = 1; i <= 3; ++i) {
    std::string name = "alpha" + std::to_string(i);
    while (out.presentation.find(name)) name += "'";
    alpha.push_back(out.presentation.var(out.presentation.add_affine(name, Element(1), a)));
  }
  out.table.presentation = out.presentation;
  out.table.entries = {{alpha[0] - alpha[1], r12}, {alpha[0] - alpha[2], r13}, {alpha[1] - alpha[2], r23}};
  for (const auto& e : out.table.entries) require_fixed(out.presentation, e.element);
  out.obstruction = find_inconsistency(out.table.entries);
  out.solvable = !out.obstruction;
  return out;
}

std::variant<FailingInstance, Refused> build_failing_instance(const SystemModel& m, const AdditiveEquation& eq, int k,
                                                              const SearchBounds& b) {
  auto diag = validate_equation(m, eq);
  if (!diag.empty()) throw std::invalid_argument("invalid additive equation: " + diag.front());
  if (!is_ff(m, eq)) throw std::invalid_argument("summands must be fixed");
  if (k < 1 || k > m.n) throw std::invalid_argument("corner index out of range");
  FfSearchResult ff = ff_decompose_bounded(m, eq, b);
  if (auto* d = std::get_if<Decomposition>(&ff)) return Refused{"ff-decomposable within bounds", *d, {}, {}};

  std::map<std::pair<int, int>, std::vector<Element>> pair_span;
  for (int i = 1; i <= m.n; ++i)
    for (int j = i + 1; j <= m.n; ++j) pair_span[{i, j}] = fixed_spanning_set(m, hat(m.n, {i, j}), b, eq.summands);
  auto facet_span = [&](int i) {
    std::vector<Element> s;
    for (int j = 1; j <= m.n; ++j)
      if (j != i)
        for (const auto& x : pair_span[{std::min(i, j), std::max(i, j)}])
          if (std::find(s.begin(), s.end(), x) == s.end()) s.push_back(x);
    return s;
  };

  const Element& bk = eq.summands[static_cast<size_t>(k - 1)];
  std::vector<Element> sk = facet_span(k);
  std::vector<Element> probe = sk;
  probe.push_back(bk);
  for (const auto& r : linear_relations(probe)) {
    if (r.back() == 0) continue;
    Refused out{"summand " + std::to_string(k) + " lies in the span of pairwise fixed elements", std::nullopt, sk, {}};
    for (size_t i = 0; i < sk.size(); ++i) out.coefficients.push_back(-r[i] / r.back());
    return out;
  }

  FailingInstance out;
  out.k = k;
  out.facet_tables.resize(static_cast<size_t>(m.n));
  Rat others = 0;
  auto facet_table = [&](int i, std::optional<CircleValue> desired) {
    CharacterTable t{m.full, {}};
    for (const auto& x : facet_span(i)) t.entries.push_back({x, CircleValue()});
    auto r = extend_character(t, {{eq.summands[static_cast<size_t>(i - 1)], desired}});
    auto* ext = std::get_if<Extended>(&r);
    if (!ext) throw std::logic_error("facet table " + std::to_string(i) + " is inconsistent");
    return *ext;
  };
  for (int i = 1; i <= m.n; ++i) {
    if (i == k) continue;
    Extended e = facet_table(i, std::nullopt);
    others += e.outcomes.back().value.angle();
    out.facet_tables[static_cast<size_t>(i - 1)] = e.table;
  }
  CircleValue rk(-others + Rat(1, 2));
  out.facet_tables[static_cast<size_t>(k - 1)] = facet_table(k, rk).table;

  std::vector<CharacterEntry> all;
  for (const auto& t : out.facet_tables)
    for (const auto& e : t.entries) {
      bool dup = false;
      for (const auto& a : all) dup = dup || (a.element == e.element && a.value == e.value);
      if (!dup) all.push_back(e);
    }
  auto ob = find_inconsistency(all);
  if (!ob) throw std::logic_error("facet tables unexpectedly amalgamate");
  out.obstruction = *ob;
  return out;
}

ValidationReport check_n_sas_witness(const SystemModel& m, const Element& btilde, const std::vector<Element>& summands,
                                     const std::vector<Element>& rewrite, const std::vector<Element>& witnesses) {
  ValidationReport r;
  auto fail = [&](std::string s) {
    r.ok = false;
    r.diagnostics.push_back(std::move(s));
  };
  auto n = static_cast<size_t>(m.n);
  if (summands.size() != n || rewrite.size() != n || witnesses.size() != n) {
    fail("shape: one summand, rewrite and witness per facet expected");
    return r;
  }
  Element s1, s2;
  for (size_t q = 0; q < n; ++q) {
    int i = static_cast<int>(q) + 1;
    IndexSet w = hat(m.n, {i});
    std::string tag = " " + std::to_string(i) + " outside corner " + index_set_str(w);
    if (!m.in_corner(summands[q], w)) fail("membership: summand" + tag);
    if (!m.in_corner(rewrite[q], w)) fail("membership: rewrite" + tag);
    if (!m.in_corner(witnesses[q], w)) fail("membership: witness" + tag);
    if (m.full.wp(witnesses[q]) != rewrite[q]) fail("torsor: wp(x" + std::to_string(i) + ") differs from rewrite " + std::to_string(i));
    s1 += summands[q];
    s2 += rewrite[q];
  }
  if (s1 != btilde) fail("sum: summands do not add up to b~");
  if (s2 != btilde) fail("sum: rewrite does not add up to b~");
  return r;
}

}  // namespace dfield
