#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "seqnpa/seqalgebra.hpp"

using namespace seqnpa;

namespace {

const NetworkShape kQrac = NetworkShape::qrac();

CanonicalWord B(int y1, int y2, int b1, int b2) {
  return CanonicalWord::of(1, make_site_operator(kQrac, 0, {y1, y2}, {b1, b2}));
}

// Index 1..16 of the 17-word level-1 set: 1 + 4 (2 y1 + y2) + (2 b1 + b2).
CanonicalWord s1(int i) {
  if (i == 0) return CanonicalWord::identity(1);
  const int y = (i - 1) / 4, b = (i - 1) % 4;
  return B(y >> 1, y & 1, b >> 1, b & 1);
}

std::vector<CanonicalWord> qrac_words() {
  std::vector<CanonicalWord> w;
  for (int i = 0; i <= 16; ++i) w.push_back(s1(i));
  return w;
}

CanonicalWord random_word(std::mt19937& rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len), op(1, 16);
  CanonicalWord w = CanonicalWord::identity(1);
  for (int n = len(rng); n > 0; --n) w = multiply(w, s1(op(rng)));
  return w;
}

}  // namespace

TEST(SiteOperator, AcceptsValidSymbols) {
  const SiteOperator a = make_site_operator(kQrac, 0, {0, 0}, {0, 0});
  EXPECT_EQ(a.party, 0);
  EXPECT_EQ(a.inputs, (std::vector<int>{0, 0}));
  EXPECT_EQ(a.outcomes, (std::vector<int>{0, 0}));
  const SiteOperator b = make_site_operator(kQrac, 0, {1, 1}, {1, 1});
  EXPECT_EQ(b.inputs, (std::vector<int>{1, 1}));
  EXPECT_EQ(CanonicalWord::of(1, b).str(), "0[11|11]");
}

TEST(SiteOperator, RejectsOutOfRange) {
  try {
    make_site_operator(kQrac, 0, {0, 2}, {0, 0});
    FAIL() << "expected an error";
  } catch (const AlgebraError& e) {
    EXPECT_NE(std::string(e.what()).find("input symbol 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_site_operator(kQrac, 1, {0, 0}, {0, 0}), AlgebraError);
  EXPECT_THROW(make_site_operator(kQrac, 0, {0}, {0, 0}), AlgebraError);
  EXPECT_THROW(make_site_operator(kQrac, 0, {0, 0}, {0, -1}), AlgebraError);
}

TEST(SiteOperators, EnumeratesSixteenForQrac) {
  const auto ops = site_operators(kQrac, 0);
  ASSERT_EQ(ops.size(), 16u);
  EXPECT_TRUE(std::is_sorted(ops.begin(), ops.end()));
  for (int i = 1; i <= 16; ++i) EXPECT_EQ(CanonicalWord::of(1, ops[i - 1]), s1(i));
}

TEST(Multiply, Idempotent) { EXPECT_EQ(multiply(B(0, 0, 0, 0), B(0, 0, 0, 0)), B(0, 0, 0, 0)); }

TEST(Multiply, OrthogonalOnSharedPrefix) {
  EXPECT_TRUE(multiply(B(0, 0, 0, 0), B(0, 1, 1, 0)).is_zero());
  EXPECT_TRUE(multiply(B(0, 0, 0, 0), B(0, 0, 0, 1)).is_zero());
}

TEST(Multiply, KeepsIrreduciblePair) {
  const CanonicalWord w = multiply(B(0, 0, 0, 0), B(0, 1, 0, 0));
  ASSERT_FALSE(w.is_zero());
  EXPECT_EQ(w.length(), 2u);
  EXPECT_EQ(w.str(), "0[00|00]0[01|00]");
}

TEST(Multiply, ZeroAbsorbsAndIdentityIsNeutral) {
  const CanonicalWord zero = CanonicalWord::zero(1), id = CanonicalWord::identity(1);
  const CanonicalWord w = multiply(B(0, 0, 0, 0), B(1, 0, 1, 1));
  EXPECT_TRUE(multiply(zero, w).is_zero());
  EXPECT_TRUE(multiply(w, zero).is_zero());
  EXPECT_EQ(multiply(id, w), w);
  EXPECT_EQ(multiply(w, id), w);
  EXPECT_EQ(id.str(), "1");
  EXPECT_EQ(zero.str(), "0");
}

TEST(Multiply, Associative) {
  std::mt19937 rng(7);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_word(rng, 3), b = random_word(rng, 3), c = random_word(rng, 3);
    EXPECT_EQ(multiply(multiply(a, b), c), multiply(a, multiply(b, c)));
  }
}

TEST(Multiply, ProjectorRulesForEveryOperator) {
  for (const auto& p : site_operators(kQrac, 0))
    for (const auto& q : site_operators(kQrac, 0)) {
      const auto pw = CanonicalWord::of(1, p), qw = CanonicalWord::of(1, q);
      if (p == q) EXPECT_EQ(multiply(pw, qw), pw);
      if (p.inputs == q.inputs && p.outcomes != q.outcomes) EXPECT_TRUE(multiply(pw, qw).is_zero());
    }
}

TEST(ReducePair, Classifies) {
  const auto op = [](int y1, int y2, int b1, int b2) { return make_site_operator(kQrac, 0, {y1, y2}, {b1, b2}); };
  EXPECT_EQ(reduce_pair(op(0, 0, 0, 0), op(0, 0, 0, 0)), PairReduction::kMerge);
  EXPECT_EQ(reduce_pair(op(0, 0, 0, 0), op(0, 0, 1, 0)), PairReduction::kZero);
  EXPECT_EQ(reduce_pair(op(0, 0, 0, 0), op(0, 1, 1, 1)), PairReduction::kZero);
  EXPECT_EQ(reduce_pair(op(0, 0, 0, 0), op(0, 1, 0, 1)), PairReduction::kKeep);
  EXPECT_EQ(reduce_pair(op(0, 0, 0, 0), op(1, 0, 1, 0)), PairReduction::kKeep);
}

TEST(Adjoint, Examples) {
  const CanonicalWord id = CanonicalWord::identity(1);
  EXPECT_EQ(adjoint(id), id);
  EXPECT_EQ(adjoint(multiply(B(0, 0, 0, 0), B(0, 1, 0, 0))), multiply(B(0, 1, 0, 0), B(0, 0, 0, 0)));
  EXPECT_TRUE(adjoint(CanonicalWord::zero(1)).is_zero());
}

TEST(Adjoint, InvolutionAndAntiHomomorphism) {
  std::mt19937 rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto u = random_word(rng, 4), v = random_word(rng, 4);
    EXPECT_EQ(adjoint(adjoint(u)), u);
    EXPECT_EQ(adjoint(multiply(u, v)), multiply(adjoint(v), adjoint(u)));
  }
}

TEST(Multiply, PartiesCommute) {
  const NetworkShape shape = kQrac.with_party({1}, {4});
  const auto bob = [&](int y1, int y2, int b1, int b2) {
    return CanonicalWord::of(2, make_site_operator(shape, 0, {y1, y2}, {b1, b2}));
  };
  const auto eve = [&](int e) { return CanonicalWord::of(2, make_site_operator(shape, 1, {0}, {e})); };
  const CanonicalWord u = multiply(bob(0, 0, 0, 0), bob(1, 0, 1, 1));
  const CanonicalWord v = eve(2);
  EXPECT_EQ(multiply(u, v), multiply(v, u));
  EXPECT_EQ(multiply(u, v).str(), multiply(v, u).str());

  // Every interleaving of the same factors yields one representation.
  std::vector<CanonicalWord> factors = {bob(0, 0, 0, 0), eve(1), bob(1, 1, 0, 1), eve(1)};
  std::vector<int> order = {0, 1, 2, 3};
  std::string first;
  do {
    std::vector<int> bob_pos;  // Bob's own order is fixed
    for (int i : order)
      if (i == 0 || i == 2) bob_pos.push_back(i);
    if (bob_pos != std::vector<int>{0, 2}) continue;
    CanonicalWord w = CanonicalWord::identity(2);
    for (int i : order) w = multiply(w, factors[i]);
    if (first.empty()) first = w.str();
    EXPECT_EQ(w.str(), first);
  } while (std::next_permutation(order.begin(), order.end()));
  EXPECT_EQ(first, "0[00|00]0[11|01]1[0|1]");
}

TEST(Multiply, ZeroPatternOfLevelOneBlock) {
  const auto w = qrac_words();
  const auto zero_expected = [](int i, int j) {
    if (i == 0 || j == 0) return false;
    const int yi = (i - 1) / 4, bi = (i - 1) % 4, yj = (j - 1) / 4, bj = (j - 1) % 4;
    if (yi == yj) return bi != bj;
    return (yi >> 1) == (yj >> 1) && (bi >> 1) != (bj >> 1);
  };
  int zeros = 0;
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j <= 16; ++j) {
      const bool z = multiply(adjoint(w[i]), w[j]).is_zero();
      EXPECT_EQ(z, zero_expected(i, j)) << i << "," << j;
      zeros += z;
    }
  // Per row: 3 same-input zeros plus 2 with the same y1 and a different b1.
  EXPECT_EQ(zeros, 16 * 5);

  // Spot checks of the block pattern.
  EXPECT_TRUE(multiply(w[1], w[2]).is_zero());
  EXPECT_TRUE(multiply(w[1], w[7]).is_zero());
  EXPECT_TRUE(multiply(w[1], w[8]).is_zero());
  EXPECT_TRUE(multiply(w[3], w[5]).is_zero());
  EXPECT_TRUE(multiply(w[9], w[15]).is_zero());
  EXPECT_TRUE(multiply(w[11], w[13]).is_zero());
  EXPECT_TRUE(multiply(w[16], w[9]).is_zero());
  EXPECT_FALSE(multiply(w[1], w[5]).is_zero());
  EXPECT_FALSE(multiply(w[3], w[7]).is_zero());
  EXPECT_FALSE(multiply(w[9], w[13]).is_zero());
  EXPECT_FALSE(multiply(w[11], w[15]).is_zero());
  EXPECT_FALSE(multiply(w[1], w[16]).is_zero());
}

TEST(NoSignaling, QracRelations) {
  const auto rels = nosignaling_relations(kQrac);
  // Four normalization families plus one relation per (x1, a1).
  ASSERT_EQ(rels.size(), 8u);
  int norms = 0;
  bool found = false;
  for (const auto& r : rels) {
    if (r.rhs_is_identity()) {
      ++norms;
      EXPECT_EQ(r.lhs.size(), 4u);
      EXPECT_TRUE(r.rhs.empty());
      continue;
    }
    EXPECT_EQ(r.k, 1);
    if (r.prefix_inputs == std::vector<int>{0} && r.prefix_outcomes == std::vector<int>{0}) {
      found = true;
      std::vector<SiteOperator> lhs = {make_site_operator(kQrac, 0, {0, 0}, {0, 0}),
                                       make_site_operator(kQrac, 0, {0, 0}, {0, 1})};
      std::vector<SiteOperator> rhs = {make_site_operator(kQrac, 0, {0, 1}, {0, 0}),
                                       make_site_operator(kQrac, 0, {0, 1}, {0, 1})};
      EXPECT_EQ(r.lhs, lhs);
      EXPECT_EQ(r.rhs, rhs);
    }
  }
  EXPECT_EQ(norms, 4);
  EXPECT_TRUE(found);

  const auto& n0 = rels.front();
  EXPECT_EQ(n0.tail_lhs, (std::vector<int>{0, 0}));
  EXPECT_EQ(n0.lhs.front(), make_site_operator(kQrac, 0, {0, 0}, {0, 0}));
  EXPECT_EQ(n0.lhs.back(), make_site_operator(kQrac, 0, {0, 0}, {1, 1}));
}

TEST(NoSignaling, SingleReceiverHasOnlyNormalization) {
  const NetworkShape shape{{{3}}, {{2}}, 1};
  const auto rels = nosignaling_relations(shape);
  ASSERT_EQ(rels.size(), 3u);
  for (const auto& r : rels) EXPECT_TRUE(r.rhs_is_identity());
}

TEST(NetworkShape, Validation) {
  EXPECT_NO_THROW(kQrac.validate());
  EXPECT_EQ(kQrac.receivers_per_party(), (std::vector<int>{2}));
  EXPECT_THROW((NetworkShape{{}, {}, 1}).validate(), AlgebraError);
  EXPECT_THROW((NetworkShape{{{2}}, {{2, 2}}, 1}).validate(), AlgebraError);
  EXPECT_THROW((NetworkShape{{{0}}, {{2}}, 1}).validate(), AlgebraError);
  EXPECT_THROW((NetworkShape{{{2}}, {{2}}, 0}).validate(), AlgebraError);
}
