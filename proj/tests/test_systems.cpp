#include <random>

#include "doctest.h"
#include "dfield/systems.hpp"
#include "planted.hpp"

using namespace dfield;
using namespace dfield::testing;

namespace {

bool has_diag(const std::vector<std::string>& d, const std::string& needle) {
  for (const auto& s : d)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

// Base {g, t}; a1 twisted by g, a2..a4 twisted by 1/g.
SystemModel twisted_four() {
  Presentation base;
  base.add_free("g");
  base.add_affine("t", Element(1), Element(1));
  Element g = base.gen("g");
  std::vector<BlockSpec> blocks{{BlockGenerator::affine("a1", g, g)}};
  for (int i = 2; i <= 4; ++i)
    blocks.push_back({BlockGenerator::affine("a" + std::to_string(i), g.inverse(), g.inverse())});
  return build_system(base, blocks);
}

}  // namespace

TEST_CASE("building systems") {
  SystemModel m = free_singletons(3);
  CHECK(m.validate().empty());
  CHECK(m.corner_ids(0).size() == 1);
  CHECK(m.corner_ids(full_set(3)).size() == 4);
  for (IndexSet w = 0; w <= full_set(3); ++w)
    for (IndexSet v = 0; v <= full_set(3); ++v) {
      std::set<int> a = m.corner_ids(w), b = m.corner_ids(v), both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.end()));
      CHECK(both == m.corner_ids(w & v));
    }

  Presentation base;
  base.add_free("g");
  try {
    build_system(base, {{BlockGenerator::free("x")}, {BlockGenerator::free("x")}});
    FAIL("overlap accepted");
  } catch (const SystemError& e) {
    CHECK(has_diag(e.diagnostics, "'x' appears in blocks 1 and 2"));
  }
  Presentation with_y = base.with_free("y");
  Element y = with_y.gen("y");
  try {
    build_system(base, {{BlockGenerator::free("y")}, {BlockGenerator::affine("z", y, Element(1))}});
    FAIL("cross-block rule accepted");
  } catch (const SystemError& e) {
    CHECK(has_diag(e.diagnostics, "rule is not over the base"));
  }
  CHECK_THROWS_AS(build_system(base, {{}}), SystemError);
  CHECK_THROWS_AS(build_system(base, {{BlockGenerator::free("g")}}), SystemError);

  SystemModel t4 = twisted_four();
  CHECK(t4.validate().empty());
  CHECK(t4.n == 4);
  Element g = t4.full.gen("g");
  Element a1 = t4.full.gen("a1");
  CHECK(t4.full.sigma(a1) == g * a1 + g);

  int c23 = attach_generator(t4, "c23", index_bit(2) | index_bit(3), Element(1),
                             t4.full.gen("a2") - t4.full.gen("a3"));
  CHECK(t4.label(c23) == (index_bit(2) | index_bit(3)));
  CHECK(t4.in_corner(t4.full.var(c23), hat(4, {1, 4})));
  CHECK_FALSE(t4.in_corner(t4.full.var(c23), hat(4, {3})));
  CHECK(t4.validate().empty());
  CHECK_THROWS(attach_generator(t4, "bad", index_bit(2), Element(1), t4.full.gen("a3")));
}

TEST_CASE("restriction over a corner") {
  SystemModel m = twisted_four();
  attach_generator(m, "c24", index_bit(2) | index_bit(4), Element(1), m.full.gen("a2") - m.full.gen("a4"));
  SystemModel r = restrict_over_corner(m, 4);
  CHECK(r.n == 3);
  CHECK(r.validate().empty());
  for (IndexSet w = 0; w <= full_set(3); ++w) CHECK(r.corner_ids(w) == m.corner_ids(w | index_bit(4)));

  SystemModel r2 = restrict_over_corner(m, 2);
  // Indices 3, 4 of the original become 2, 3.
  for (IndexSet w = 0; w <= full_set(3); ++w) {
    IndexSet orig = index_bit(2) | (w & 1u) | ((w & ~1u) << 1);
    CHECK(r2.corner_ids(w) == m.corner_ids(orig));
  }
  SystemModel x = restrict_over_corner(restrict_over_corner(m, 4), 1);
  SystemModel y = restrict_over_corner(restrict_over_corner(m, 1), 3);
  CHECK(x.labels == y.labels);
  CHECK_THROWS(restrict_over_corner(restrict_over_corner(restrict_over_corner(x, 1), 1), 1));

  // Equations planted over the restriction are valid equations of m's top corners.
  std::mt19937_64 rng(7);
  GenericPoints pts(7);
  for (int k = 0; k < 20; ++k) {
    Decomposition c = planted_family(r, rng);
    AdditiveEquation eq = assemble_planted(r, c);
    REQUIRE(validate_equation(r, eq).empty());
    for (int i = 1; i <= 3; ++i) CHECK(m.in_corner(eq.summands[static_cast<size_t>(i - 1)], hat(4, {i})));
    CHECK(validate_decomposition(r, eq, decompose(r, eq, pts)).ok);
  }
}

TEST_CASE("step one specialisation") {
  SystemModel m = free_singletons(3);
  Element x1 = m.full.gen("x1"), x2 = m.full.gen("x2"), x3 = m.full.gen("x3");
  AdditiveEquation eq{{x2 - x3, x3 - x1, x1 - x2}};
  REQUIRE(validate_equation(m, eq).empty());
  GenericPoints pts(11);
  auto d = specialise_step1(m, eq, 1, pts);
  REQUIRE(d.size() == 2);
  CHECK((d[2] + x3).is_constant());
  CHECK((d[3] - x2).is_constant());
  CHECK(d[2] + d[3] == eq.summands[0]);
  CHECK(m.in_corner(d[2], index_bit(3)));
  CHECK(m.in_corner(d[3], index_bit(2)));

  AdditiveEquation zero{{Element(), Element(), Element()}};
  for (int i = 1; i <= 3; ++i)
    for (const auto& [j, x] : specialise_step1(m, zero, i, pts)) CHECK(x.is_zero());

  CHECK_THROWS_AS(specialise_step1(m, AdditiveEquation{{x1, Element(), -x1}}, 1, pts), std::invalid_argument);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    Decomposition c = planted_family(m, rng);
    AdditiveEquation p = assemble_planted(m, c);
    for (int i = 1; i <= 3; ++i) {
      auto dd = specialise_step1(m, p, i, pts);
      Element s;
      for (const auto& [j, x] : dd) {
        CHECK(m.in_corner(x, hat(3, {i, j})));
        s += x;
      }
      CHECK(s == p.summands[static_cast<size_t>(i - 1)]);
    }
  }
}

TEST_CASE("no generic point within the budget") {
  // The summand 1/(x1 - x1[1]) - ... has a pole on the whole diagonal, and a
  // budget of one draw on a one-point box cannot avoid it.
  SystemModel m = free_singletons(3);
  Element x1 = m.full.gen("x1");
  Element x1s = m.full.sigma(x1);
  Element q = Element(1) / (x1 - x1s);
  AdditiveEquation eq{{Element(), q, -q}};
  REQUIRE(validate_equation(m, eq).empty());
  GenericPoints lucky(5, 32);
  CHECK_NOTHROW(specialise_step1(m, eq, 1, lucky));
  int failures = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    GenericPoints one(s, 1);
    try {
      specialise_step1(m, eq, 1, one);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "no generic point found");
      ++failures;
    }
  }
  CHECK(failures > 0);
}

TEST_CASE("decomposition of planted cocycles") {
  std::mt19937_64 rng(20261018);
  for (int n : {3, 4, 5}) {
    SystemModel m = free_singletons(n);
    GenericPoints pts(static_cast<std::uint64_t>(n));
    for (int k = 0; k < 10; ++k) {
      AdditiveEquation eq = assemble_planted(m, planted_family(m, rng));
      Decomposition d = decompose(m, eq, pts);
      ValidationReport r = validate_decomposition(m, eq, d);
      CHECK(r.ok);
    }
    AdditiveEquation zero{std::vector<Element>(static_cast<size_t>(n))};
    Decomposition dz = decompose(m, zero, pts);
    for (const auto& [ij, c] : dz.c) CHECK(c.is_zero());
  }

  SystemModel m = free_singletons(3);
  Element x1 = m.full.gen("x1"), x2 = m.full.gen("x2"), x3 = m.full.gen("x3");
  AdditiveEquation eq{{x2 - x3, x3 - x1, x1 - x2}};
  GenericPoints pts(1);
  Decomposition d = decompose(m, eq, pts);
  CHECK(validate_decomposition(m, eq, d).ok);
  CHECK((d.at(1, 2) + x3).is_constant());
  CHECK((d.at(1, 3) - x2).is_constant());

  // Determinism under a fixed seed.
  GenericPoints p1(99), p2(99);
  std::mt19937_64 r1(5);
  SystemModel m4 = free_singletons(4);
  AdditiveEquation e4 = assemble_planted(m4, planted_family(m4, r1));
  CHECK(decompose(m4, e4, p1) == decompose(m4, e4, p2));
}

TEST_CASE("validation reports violations") {
  SystemModel m = free_singletons(3);
  Element x1 = m.full.gen("x1"), x2 = m.full.gen("x2"), x3 = m.full.gen("x3");
  AdditiveEquation eq{{x2 - x3, x3 - x1, x1 - x2}};
  Decomposition hand;
  hand.c[{1, 2}] = -x3;
  hand.c[{2, 1}] = x3;
  hand.c[{1, 3}] = x2;
  hand.c[{3, 1}] = -x2;
  hand.c[{2, 3}] = -x1;
  hand.c[{3, 2}] = x1;
  CHECK(validate_decomposition(m, eq, hand).ok);

  Decomposition bumped = hand;
  bumped.c[{1, 2}] += Element(1);
  auto r = validate_decomposition(m, eq, bumped);
  CHECK_FALSE(r.ok);
  CHECK(has_diag(r.diagnostics, "recovery: row 1"));
  CHECK(has_diag(r.diagnostics, "antisymmetry"));

  Decomposition wrong = hand;
  wrong.c[{1, 2}] = x1;
  wrong.c[{2, 1}] = -x1;
  CHECK(has_diag(validate_decomposition(m, eq, wrong).diagnostics, "membership: c^2_w1"));
  wrong.c.erase({2, 1});
  CHECK(has_diag(validate_decomposition(m, eq, wrong).diagnostics, "missing c^1_w2"));
}

TEST_CASE("splitting a two-block difference") {
  // d12 - d13 - d23 = 0 forces d12 to split into single-block parts.
  SystemModel m3 = build_system(twisted_four().corner(0), [] {
    Presentation e;
    e.add_free("g");
    Element g = e.gen("g");
    return std::vector<BlockSpec>{{BlockGenerator::affine("a1", g, g)},
                                  {BlockGenerator::affine("a2", g.inverse(), g.inverse())},
                                  {BlockGenerator::affine("a3", g.inverse(), g.inverse())}};
  }());
  Element a1 = m3.full.gen("a1"), a2 = m3.full.gen("a2"), a3 = m3.full.gen("a3"), g = m3.full.gen("g");
  Element d12 = a1 * a1 + a2 * g + Element(3);
  Element d13 = a1 * a1 - a3;
  Element d23 = a2 * g + a3 + Element(3);
  AdditiveEquation eq{{-d23, -d13, d12}};
  REQUIRE(validate_equation(m3, eq).empty());
  GenericPoints pts(4);
  Decomposition d = decompose(m3, eq, pts);
  CHECK(validate_decomposition(m3, eq, d).ok);
  Element g2 = d.at(3, 1), g1 = d.at(3, 2);
  CHECK(m3.in_corner(g1, index_bit(1)));
  CHECK(m3.in_corner(g2, index_bit(2)));
  CHECK(g1 + g2 == d12);
}

TEST_CASE("torsor systems from witnesses") {
  SystemModel m = unit_torsors(2);
  Element t = m.full.gen("t"), s1 = m.full.gen("s1"), s2 = m.full.gen("s2");
  TorsorWitnessOracle oracle = bounded_search_oracle(m, {3, 0, 0});
  GenericPoints pts(2);
  WpSystem w = wp_decompose_with_witnesses(m, {s2 + t, -s1 - t}, oracle, pts);
  CHECK(w.e.at(1, 2) == Element(2));
  CHECK(w.e.at(2, 1) == Element(-2));
  CHECK(m.in_corner(w.witnesses.at(1, 2), 0));
  CHECK(m.full.wp(w.witnesses.at(1, 2)) == Element(2));

  WpSystem z = wp_decompose_with_witnesses(m, {Element(3), Element(-1)}, oracle, pts);
  for (const auto& [ik, e] : z.e.c) CHECK(e.is_zero());
  CHECK_THROWS_AS(wp_decompose_with_witnesses(m, {s2, Element()}, oracle, pts), std::invalid_argument);

  // Planted height 3: a non-fixed cocycle plus a fixed constant.
  SystemModel m3 = unit_torsors(3);
  TorsorWitnessOracle o3 = bounded_search_oracle(m3, {3, 0, 0});
  std::mt19937_64 rng(8);
  for (int k = 0; k < 5; ++k) {
    Decomposition h;
    for (int i = 1; i <= 3; ++i)
      for (int j = i + 1; j <= 3; ++j) {
        Element x = random_poly(rng, corner_vars(m3, hat(3, {i, j}), 0), 3, 2);
        h.c[{i, j}] = x;
        h.c[{j, i}] = -x;
      }
    std::vector<Element> d = assemble_planted(m3, h).summands;
    d[0] += Element(5);
    WpSystem ws = wp_decompose_with_witnesses(m3, d, o3, pts);
    for (int i = 1; i <= 3; ++i) {
      Element sum;
      for (int j = 1; j <= 3; ++j)
        if (j != i) {
          sum += ws.e.at(i, j);
          CHECK(ws.e.at(i, j) == -ws.e.at(j, i));
          CHECK(ws.witnesses.at(i, j) == -ws.witnesses.at(j, i));
          CHECK(m3.full.wp(ws.witnesses.at(i, j)) == ws.e.at(i, j));
          CHECK(m3.in_corner(ws.witnesses.at(i, j), hat(3, {i, j})));
        }
      CHECK(sum == m3.full.wp(d[static_cast<size_t>(i - 1)]));
    }
  }
  WpSystem zf = wp_decompose_with_witnesses(
      m3, {m3.full.gen("s2") - m3.full.gen("s3"), Element(1), m3.full.gen("t") - m3.full.gen("s1")}, o3, pts);
  for (const auto& [ik, e] : zf.e.c) CHECK(e.is_zero());
}

TEST_CASE("fixed-field decompositions from witnesses") {
  std::mt19937_64 rng(31);
  for (int n : {3, 4}) {
    SystemModel m = unit_torsors(n);
    TorsorWitnessOracle oracle = bounded_search_oracle(m, {3, 0, 0});
    GenericPoints pts(static_cast<std::uint64_t>(n) * 17);
    for (int k = 0; k < 4; ++k) {
      AdditiveEquation eq = assemble_planted(m, planted_fixed_family(m, rng));
      REQUIRE(is_ff(m, eq));
      Decomposition d = ff_decompose_with_witnesses(m, eq, oracle, pts);
      CHECK(validate_decomposition(m, eq, d).ok);
      for (const auto& [ij, c] : d.c) CHECK(m.full.is_fixed(c));
    }
    AdditiveEquation zero{std::vector<Element>(static_cast<size_t>(n))};
    Decomposition dz = ff_decompose_with_witnesses(m, zero, oracle, pts);
    for (const auto& [ij, c] : dz.c) CHECK(c.is_zero());
  }

  // An oracle that never answers blocks the first nonzero query.
  SystemModel m = unit_torsors(3);
  Element s1 = m.full.gen("s1"), s2 = m.full.gen("s2"), s3 = m.full.gen("s3"), t = m.full.gen("t");
  AdditiveEquation eq{{s2 - s3, s3 - s1, s1 - s2}};
  TorsorWitnessOracle none = [](const Element&, IndexSet) { return std::optional<Element>(); };
  GenericPoints pts(3);
  try {
    ff_decompose_with_witnesses(m, eq, none, pts);
    FAIL("expected a blocked query");
  } catch (const WitnessUnavailable& e) {
    CHECK(std::string(e.what()).rfind("witness unavailable at T[", 0) == 0);
    CHECK_FALSE(e.target.is_zero());
  }
  CHECK_THROWS_AS(ff_decompose_with_witnesses(m, AdditiveEquation{{s2 * t, Element(), -s2 * t}}, none, pts),
                  std::invalid_argument);
}

TEST_CASE("bounded fixed-field decompositions") {
  SystemModel m = unit_torsors(3);
  SearchBounds b{2, 0, 0};
  auto span = fixed_spanning_set(m, index_bit(1), b);
  // 1, u, u^2 for u = s1 - t.
  CHECK(span.size() == 3);
  for (const auto& x : span) CHECK(m.full.is_fixed(x));

  std::mt19937_64 rng(12);
  for (int n : {3, 4}) {
    SystemModel mn = unit_torsors(n);
    for (int k = 0; k < 3; ++k) {
      AdditiveEquation eq = assemble_planted(mn, planted_fixed_family(mn, rng));
      auto r = ff_decompose_bounded(mn, eq, b);
      REQUIRE(std::holds_alternative<Decomposition>(r));
      const auto& d = std::get<Decomposition>(r);
      CHECK(validate_decomposition(mn, eq, d).ok);
      for (const auto& [ij, c] : d.c) CHECK(mn.full.is_fixed(c));
    }
    auto z = ff_decompose_bounded(mn, AdditiveEquation{std::vector<Element>(static_cast<size_t>(n))}, b);
    REQUIRE(std::holds_alternative<Decomposition>(z));
    for (const auto& [ij, c] : std::get<Decomposition>(z).c) CHECK(c.is_zero());
  }

  // Fixed summands whose only decomposition needs degree 3.
  Element u1 = m.full.gen("s1") - m.full.gen("t");
  Element c = u1 * u1 * u1;
  AdditiveEquation eq{{Element(), -c, c}};
  REQUIRE(validate_equation(m, eq).empty());
  CHECK(std::holds_alternative<NotFoundWithinBounds>(ff_decompose_bounded(m, eq, b)));
  CHECK(std::holds_alternative<Decomposition>(ff_decompose_bounded(m, eq, {3, 0, 0})));
}
