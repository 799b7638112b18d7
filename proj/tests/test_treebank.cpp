#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "stnlm/treebank.hpp"

using namespace stnlm;
using stnlm::testing::tree_of;

TEST_CASE("parse_bracketed builds the documented 5-leaf tree") {
  auto trees = parse_bracketed(
      "(S (NP (D the) (N cat)) (VP (V eats) (NP (D the) (N fish))))");
  REQUIRE(trees.size() == 1);
  const ParseTree& t = trees[0];
  CHECK(t.leaf_count() == 5);
  CHECK(t.internal_count() == 4);
  CHECK(t.node(t.root()).category == "S");
  CHECK(t.words() == std::vector<std::string>{"the", "cat", "eats", "the",
                                              "fish"});
}

TEST_CASE("parse_bracketed handles a single-leaf tree") {
  auto trees = parse_bracketed("(N cat)");
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].leaf_count() == 1);
  CHECK(trees[0].internal_count() == 0);
  CHECK(trees[0].node(trees[0].root()).coord.z == 1);
}

TEST_CASE("parse_bracketed rejects k-ary nodes unless binarization is on") {
  const std::string text = "(S (NP (D the) (A happy) (N cat)) (V sleeps))";
  CHECK_THROWS_AS(parse_bracketed(text), NonBinaryNode);
  ParseOptions opt;
  opt.binarize = true;
  CHECK_NOTHROW(parse_bracketed(text, opt));
}

TEST_CASE("parse_bracketed strips function tags and collapses unary chains") {
  ParseStats stats;
  auto trees = parse_bracketed("(S (NP-SBJ (NP (N John))) (VP-1 (V runs)))",
                               {}, &stats);
  REQUIRE(trees.size() == 1);
  const ParseTree& t = trees[0];
  // NP-SBJ -> NP, then the unary chains NP->NP->N and VP->V collapse.
  CHECK(t.leaf_count() == 2);
  const auto leaves = t.leaves_in_order();
  CHECK(t.node(leaves[0]).category == "N");
  CHECK(t.node(leaves[1]).category == "V");
  CHECK(stats.collapsed_unary == 3);
}

TEST_CASE("trace tokens abort parsing or skip the sentence") {
  const std::string text = "(S (NP (N John)) (VP (V ran) (NP <trace>)))";
  CHECK_THROWS_AS(parse_bracketed(text), TraceToken);
  CHECK_THROWS_AS(parse_bracketed("(S (X *T*-1) (N a))"), TraceToken);

  ParseOptions opt;
  opt.skip_traces = true;
  ParseStats stats;
  auto trees = parse_bracketed(text + " (N cat)", opt, &stats);
  CHECK(trees.size() == 1);
  CHECK(stats.skipped_sentences == 1);
}

TEST_CASE("parse_bracketed reports malformed input") {
  CHECK_THROWS_AS(parse_bracketed("(S (N cat)"), UnbalancedBrackets);
  CHECK_THROWS_AS(parse_bracketed("(S (N cat)))"), UnbalancedBrackets);
  CHECK_THROWS_AS(parse_bracketed("stray (N cat)"), UnbalancedBrackets);
  CHECK_THROWS_AS(parse_bracketed("(S () (N cat))"), EmptyNode);
}

TEST_CASE("binarize nests k-ary nodes with primed labels") {
  ParseTree t;
  int d = t.add_leaf("D", "the");
  int a = t.add_leaf("A", "happy");
  int n = t.add_leaf("N", "cat");
  t.set_root(t.add_internal("NP", {d, a, n}));
  t.assign_coords();

  ParseTree left = binarize(t, BinarizePolicy::left);
  CHECK(to_bracketed(left) == "(NP (NP' (D the) (A happy)) (N cat))");

  ParseTree right = binarize(t, BinarizePolicy::right);
  CHECK(to_bracketed(right) == "(NP (D the) (NP' (A happy) (N cat)))");
}

TEST_CASE("binarize of a 4-ary node yields a chain of 3 binary nodes") {
  ParseTree t;
  std::vector<int> kids;
  for (int i = 0; i < 4; ++i)
    kids.push_back(t.add_leaf("X", "w" + std::to_string(i)));
  t.set_root(t.add_internal("Y", kids));
  t.assign_coords();
  ParseTree b = binarize(t, BinarizePolicy::right);
  CHECK(b.is_binary());
  CHECK(b.leaf_count() == 4);
  CHECK(b.internal_count() == 3);  // n - 1
  CHECK(b.words() == t.words());   // leaf order preserved
}

TEST_CASE("binarize is the identity on binary trees") {
  ParseTree t = tree_of("(S (NP (D the) (N cat)) (V sleeps))");
  ParseTree b = binarize(t, BinarizePolicy::left);
  CHECK(to_bracketed(b) == to_bracketed(t));
  ParseTree bb = binarize(b, BinarizePolicy::right);
  CHECK(to_bracketed(bb) == to_bracketed(b));
}

TEST_CASE("tree_shape canonical strings") {
  CHECK(tree_shape(tree_of("(S (A a) (B b))")) == "(..)");
  CHECK(tree_shape(tree_of(
            "(S (S (S (A a) (B b)) (C c)) (D d))")) == "(((..).).)");
  CHECK(tree_shape(tree_of("(S (X (A a) (B b)) (Y (C c) (D d)))")) ==
        "((..)(..))");
  CHECK(tree_shape(tree_of("(N cat)")) == ".");
}

TEST_CASE("coordinates follow the z/t convention") {
  ParseTree t = tree_of("(S (X (A a) (B b)) (Y (C c) (D d)))");
  const auto leaves = t.leaves_in_order();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    CHECK(t.node(leaves[i]).coord.z == 1);
    CHECK(t.node(leaves[i]).coord.t == static_cast<int>(i));
  }
  CHECK(t.node(t.root()).coord.z == 3);  // tree height
  CHECK(t.node(t.root()).coord.t == 0);
  // The two z=2 nodes sit at t=0 and t=2.
  std::set<int> t_at_z2;
  for (int i = 0; i < t.size(); ++i)
    if (t.node(i).coord.z == 2) t_at_z2.insert(t.node(i).coord.t);
  CHECK(t_at_z2 == std::set<int>{0, 2});
}

TEST_CASE("unbalanced trees keep z = 1 + max of children") {
  ParseTree t = tree_of("(S (S (S (A a) (B b)) (C c)) (D d))");
  CHECK(t.node(t.root()).coord.z == 4);
}

TEST_CASE("catalan_count matches the closed form") {
  CHECK(catalan_count(1) == 1);
  CHECK(catalan_count(2) == 1);
  CHECK(catalan_count(3) == 2);
  CHECK(catalan_count(4) == 5);
  CHECK(catalan_count(10) == 4862);
  // Arbitrary precision: C_39 overflows 64-bit.
  CHECK(catalan_count(40) == BigInt("680425371729975800390"));
}

TEST_CASE("enumerate_shapes produces every shape exactly once") {
  CHECK(enumerate_shapes(1) == std::vector<std::string>{"."});
  auto s3 = enumerate_shapes(3);
  std::sort(s3.begin(), s3.end());
  CHECK(s3 == std::vector<std::string>{"((..).)", "(.(..))"});

  auto s6 = enumerate_shapes(6);
  CHECK(s6.size() == 42);
  std::set<std::string> uniq(s6.begin(), s6.end());
  CHECK(uniq.size() == s6.size());

  for (int n = 1; n <= 8; ++n)
    CHECK(BigInt(enumerate_shapes(n).size()) == catalan_count(n));

  CHECK_THROWS_AS(enumerate_shapes(15), LimitExceeded);
}

TEST_CASE("tree_from_shape round trips with tree_shape") {
  for (const std::string& s : enumerate_shapes(6)) {
    ParseTree t = tree_from_shape(s);
    CHECK(tree_shape(t) == s);
    CHECK(t.internal_count() == t.leaf_count() - 1);
  }
}

TEST_CASE("parsed trees satisfy the structural unit counts") {
  auto trees = parse_bracketed(
      "(S (NP (D the) (N cat)) (VP (V eats) (NP (D the) (N fish)))) "
      "(S (NP (D a) (N dog)) (V runs)) (N hi)");
  for (const ParseTree& t : trees) {
    const int n = t.leaf_count();
    CHECK(t.internal_count() == n - 1);
    CHECK(t.size() == 2 * n - 1);
  }
}
