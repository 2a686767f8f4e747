#include <gtest/gtest.h>

#include "bagcheck/normalizer.hpp"
#include "bagcheck/oracle.hpp"
#include "bagcheck/plan_io.hpp"
#include "bagcheck/sql_parser.hpp"
#include "testkit.hpp"

namespace bagcheck {
namespace {

class NormalizerTest : public ::testing::Test {
 protected:
  Catalog catalog = testkit::corpus_catalog();
  QueryPtr emp = table(catalog, "EMP");
  QueryPtr dept = table(catalog, "DEPT");
  QueryPtr log = table(catalog, "LOG");
  SmtSession session;
  NormalizeOptions options{&session, std::chrono::milliseconds(500)};

  void expect_oracle_equal(const QueryPtr& a, const QueryPtr& b, int databases = 100) {
    for (int seed = 0; seed < databases; ++seed) {
      Database db = random_database(catalog, static_cast<std::uint64_t>(seed), 5, 0.1);
      ASSERT_TRUE(bag_equal(eval_query(a, db), eval_query(b, db)))
          << "seed " << seed << "\n" << dump_plan(*a) << "\n" << dump_plan(*b);
    }
  }
};

TEST_F(NormalizerTest, SpjMergeComposes) {
  QueryPtr inner = spj({emp, dept}, cmp(CmpOp::Eq, col(2), col(4)), {col(1), col(2), col(5)});
  QueryPtr outer = spj({inner}, cmp(CmpOp::Gt, col(0), lit_int(3)), {col(2), arith(ArithOp::Add, col(1), lit_int(1))});
  auto merged = rule_spj_merge(*as<plan::Spj>(outer), 0);
  ASSERT_TRUE(merged);
  QueryPtr expected = spj({emp, dept}, and_pred(cmp(CmpOp::Gt, col(1), lit_int(3)), cmp(CmpOp::Eq, col(2), col(4))),
                          {col(5), arith(ArithOp::Add, col(2), lit_int(1))});
  EXPECT_TRUE(same(*merged, expected)) << dump_plan(**merged);
  EXPECT_FALSE(rule_spj_merge(*as<plan::Spj>(inner), 0));
}

TEST_F(NormalizerTest, SpjMergeIdentityShifts) {
  QueryPtr inner = spj({dept}, cmp(CmpOp::Gt, col(0), lit_int(1)), identity_projections(2));
  QueryPtr outer = spj({emp, inner}, cmp(CmpOp::Eq, col(2), col(4)), {col(5)});
  auto merged = rule_spj_merge(*as<plan::Spj>(outer), 1);
  ASSERT_TRUE(merged);
  QueryPtr expected =
      spj({emp, dept}, and_pred(cmp(CmpOp::Eq, col(2), col(4)), cmp(CmpOp::Gt, col(4), lit_int(1))), {col(5)});
  EXPECT_TRUE(same(*merged, expected)) << dump_plan(**merged);
}

TEST_F(NormalizerTest, SpjMergeThroughCase) {
  QueryPtr inner = spj({emp}, true_pred(),
                       {case_expr({{cmp(CmpOp::Gt, col(1), lit_int(4)), col(2)}}, null_expr()), col(3)});
  QueryPtr outer = spj({inner}, cmp(CmpOp::Lt, col(0), lit_int(6)), {col(0), col(1)});
  auto merged = rule_spj_merge(*as<plan::Spj>(outer), 0);
  ASSERT_TRUE(merged);
  expect_oracle_equal(outer, *merged);
}

TEST_F(NormalizerTest, UnsatisfiablePredicateBecomesEmpty) {
  QueryPtr q = spj({emp}, and_pred(cmp(CmpOp::Gt, arith(ArithOp::Add, col(1), lit_int(5)), lit_int(10)),
                                   cmp(CmpOp::Lt, col(1), lit_int(4))),
                   {col(0)});
  QueryPtr wrapped = spj({q, dept}, true_pred(), {col(0), col(2)});
  NormalizeStats stats;
  QueryPtr n = normalize(wrapped, catalog, options, &stats);
  const auto* e = as<plan::Empty>(n);
  ASSERT_TRUE(e) << dump_plan(*n);
  EXPECT_EQ(e->arity, 2u);
  EXPECT_GE(stats.empty_table, 1u);
}

TEST_F(NormalizerTest, EmptyAbsorption) {
  QueryPtr none = spj({emp}, false_pred(), {col(0)});
  QueryPtr some = spj({emp}, true_pred(), {col(0)});
  QueryPtr u = normalize(union_all({none, some}), catalog, options);
  ASSERT_TRUE(as<plan::Union>(u));
  EXPECT_EQ(as<plan::Union>(u)->inputs.size(), 1u);
  EXPECT_TRUE(as<plan::Empty>(normalize(agg(none, {0}, {}), catalog, options)));
  EXPECT_TRUE(as<plan::Empty>(normalize(union_all({none, none}), catalog, options)));
}

TEST_F(NormalizerTest, UnfIsAFixpoint) {
  QueryPtr q = parse_sql("SELECT SALARY FROM EMP WHERE DEPT_ID = 3", catalog);
  QueryPtr n = normalize(q, catalog, options);
  ASSERT_TRUE(is_unf(*n));
  NormalizeStats stats;
  EXPECT_TRUE(same(normalize(n, catalog, options, &stats), n));
  EXPECT_EQ(stats.steps(), 0u);
}

TEST_F(NormalizerTest, BareTableIsWrapped) {
  QueryPtr n = normalize(emp, catalog, options);
  QueryPtr expected = union_all({spj({emp}, true_pred(), identity_projections(4))});
  EXPECT_TRUE(same(n, expected));
  EXPECT_FALSE(is_unf(*emp));
}

TEST_F(NormalizerTest, UnionFlatten) {
  QueryPtr a = spj({emp}, true_pred(), {col(0)});
  QueryPtr b = spj({dept}, true_pred(), {col(0)});
  QueryPtr c = spj({log}, true_pred(), {col(0)});
  auto flat = rule_union_flatten(*union_all({union_all({a, b}), c}));
  ASSERT_TRUE(flat);
  EXPECT_TRUE(same(*flat, union_all({a, b, c})));

  PredPtr p = cmp(CmpOp::Gt, col(0), lit_int(2));
  auto distributed = rule_union_flatten(*spj({union_all({a, b})}, p, {col(0)}));
  ASSERT_TRUE(distributed);
  EXPECT_TRUE(same(*distributed, union_all({spj({a}, p, {col(0)}), spj({b}, p, {col(0)})})));

  EXPECT_FALSE(rule_union_flatten(*union_all({a})));
}

TEST_F(NormalizerTest, PushdownOnGroupColumn) {
  QueryPtr grouped = agg(emp, {2}, {{AggKind::Sum, 1}});
  QueryPtr q = spj({grouped}, and_pred(cmp(CmpOp::Eq, col(0), lit_int(4)), cmp(CmpOp::Gt, col(1), lit_int(3))),
                   {col(0), col(1)});
  auto pushed = rule_predicate_pushdown(*as<plan::Spj>(q));
  ASSERT_TRUE(pushed);
  const auto* s = as<plan::Spj>(*pushed);
  ASSERT_TRUE(s);
  EXPECT_TRUE(same(s->predicate, cmp(CmpOp::Gt, col(1), lit_int(3))));
  const auto* a = as<plan::Agg>(s->inputs[0]);
  ASSERT_TRUE(a);
  const auto* below = as<plan::Spj>(a->input);
  ASSERT_TRUE(below);
  EXPECT_TRUE(same(below->predicate, cmp(CmpOp::Eq, col(2), lit_int(4))));
  expect_oracle_equal(q, *pushed);
}

TEST_F(NormalizerTest, NoPushdownOnAggregateColumn) {
  QueryPtr q = spj({agg(emp, {2}, {{AggKind::Sum, 1}})}, cmp(CmpOp::Gt, col(1), lit_int(3)), {col(0)});
  EXPECT_FALSE(rule_predicate_pushdown(*as<plan::Spj>(q)));
}

TEST_F(NormalizerTest, MaxOverMaxMerges) {
  QueryPtr inner = agg(emp, {2, 3}, {{AggKind::Max, 1}});
  QueryPtr outer = agg(inner, {0}, {{AggKind::Max, 2}});
  auto merged = rule_agg_merge(*as<plan::Agg>(outer));
  ASSERT_TRUE(merged);
  EXPECT_TRUE(same(*merged, agg(emp, {2}, {{AggKind::Max, 1}})));
  expect_oracle_equal(outer, *merged);
}

TEST_F(NormalizerTest, SumOverSumAndCount) {
  QueryPtr inner = agg(emp, {2, 3}, {{AggKind::Sum, 1}, {AggKind::Count, 1}});
  QueryPtr outer = agg(inner, {0}, {{AggKind::Sum, 2}, {AggKind::Sum, 3}});
  auto merged = rule_agg_merge(*as<plan::Agg>(outer));
  ASSERT_TRUE(merged);
  EXPECT_TRUE(same(*merged, agg(emp, {2}, {{AggKind::Sum, 1}, {AggKind::Count, 1}})));
  expect_oracle_equal(outer, *merged);
}

TEST_F(NormalizerTest, AggMergeInapplicable) {
  QueryPtr inner = agg(emp, {2, 3}, {{AggKind::Avg, 1}});
  EXPECT_FALSE(rule_agg_merge(*as<plan::Agg>(agg(inner, {0}, {{AggKind::Max, 2}}))));
  QueryPtr maxes = agg(emp, {2, 3}, {{AggKind::Max, 1}});
  EXPECT_FALSE(rule_agg_merge(*as<plan::Agg>(agg(maxes, {0}, {{AggKind::Sum, 2}}))));
  EXPECT_FALSE(rule_agg_merge(*as<plan::Agg>(agg(maxes, {2}, {}))));
}

TEST_F(NormalizerTest, SelfJoinOnKey) {
  QueryPtr q = spj({emp, emp}, cmp(CmpOp::Eq, col(0), col(4)), identity_projections(8));
  auto r = rule_integrity(*q, catalog);
  ASSERT_TRUE(r);
  std::vector<ExprPtr> doubled = identity_projections(4);
  for (std::size_t i = 0; i < 4; ++i) doubled.push_back(col(i));
  EXPECT_TRUE(same(*r, spj({emp}, true_pred(), doubled))) << dump_plan(**r);
  expect_oracle_equal(q, *r);
}

TEST_F(NormalizerTest, KeyCoveringDistinct) {
  QueryPtr q = agg(emp, {0, 2}, {});
  auto r = rule_integrity(*q, catalog);
  ASSERT_TRUE(r);
  expect_oracle_equal(q, *r);
  EXPECT_FALSE(rule_integrity(*agg(emp, {1, 2}, {}), catalog));
}

TEST_F(NormalizerTest, NoKeyNoIntegrityRule) {
  EXPECT_FALSE(rule_integrity(*spj({log, log}, cmp(CmpOp::Eq, col(0), col(2)), {col(0)}), catalog));
  EXPECT_FALSE(rule_integrity(*agg(log, {0, 1}, {}), catalog));
}

TEST(NormalizerProperty, BoundedIdempotentPreserving) {
  Catalog fuzz = testkit::fuzz_catalog();
  testkit::Generator gen(fuzz, 31337);
  SmtSession session;
  NormalizeOptions options{&session, std::chrono::milliseconds(500)};
  for (int i = 0; i < 60; ++i) {
    QueryPtr q = gen.tree(1 + i % 4);
    NormalizeStats stats;
    QueryPtr n = normalize(q, fuzz, options, &stats);
    EXPECT_TRUE(is_unf(*n)) << dump_plan(*n);
    EXPECT_LE(stats.steps(), 10 * node_count(*q)) << dump_plan(*q);
    EXPECT_TRUE(validate(*n, fuzz).empty());
    EXPECT_TRUE(same(normalize(n, fuzz, options), n)) << dump_plan(*q);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Database db = random_database(fuzz, 100 * static_cast<std::uint64_t>(i) + seed, 5, 0.1);
      ASSERT_TRUE(bag_equal(eval_query(q, db), eval_query(n, db))) << dump_plan(*q);
    }
  }
}

TEST(NormalizerProperty, WithoutSolverOnlyLiteralFalseEmpties) {
  Catalog fuzz = testkit::fuzz_catalog();
  QueryPtr r = table(fuzz, "R");
  QueryPtr q = spj({r}, and_pred(cmp(CmpOp::Gt, col(0), lit_int(3)), cmp(CmpOp::Lt, col(0), lit_int(2))), {col(0)});
  EXPECT_FALSE(as<plan::Empty>(normalize(q, fuzz)));
  EXPECT_TRUE(as<plan::Empty>(normalize(spj({r}, false_pred(), {col(0)}), fuzz)));
}

}  // namespace
}  // namespace bagcheck
