#include <gtest/gtest.h>

#include "bagcheck/error.hpp"
#include "bagcheck/plan_io.hpp"
#include "bagcheck/sql_parser.hpp"
#include "testkit.hpp"

namespace bagcheck {
namespace {

class PlanIoTest : public ::testing::Test {
 protected:
  Catalog catalog = testkit::corpus_catalog();
};

TEST_F(PlanIoTest, TableLeaf) {
  QueryPtr q = load_plan(R"({"table": "EMP"})", catalog);
  ASSERT_TRUE(as<plan::Table>(q));
  EXPECT_EQ(as<plan::Table>(q)->name, "EMP");
  EXPECT_TRUE(same(load_plan(dump_plan(*q), catalog), q));
}

TEST_F(PlanIoTest, TwoInputSpj) {
  QueryPtr q = load_plan(R"({"spj": {
      "inputs": [{"table": "DEPT"}, {"table": "EMP"}],
      "predicate": {"and": [{"cmp": {"op": "eq", "lhs": {"col": 4}, "rhs": {"col": 0}}},
                            {"cmp": {"op": "gt", "lhs": {"binop": {"op": "add", "lhs": {"col": 4}, "rhs": {"const": {"int": 5}}}},
                                     "rhs": {"const": {"int": 15}}}}]},
      "projections": [{"col": 3}, {"col": 5}]}})",
                         catalog);
  const auto* s = as<plan::Spj>(q);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->inputs.size(), 2u);
  EXPECT_EQ(arity(q), 2u);
}

TEST_F(PlanIoTest, UnknownTag) {
  EXPECT_THROW(load_plan(R"({"scan": "EMP"})", catalog), ParseError);
  EXPECT_THROW(load_plan("not json", catalog), ParseError);
}

TEST_F(PlanIoTest, InvalidTreeIsRejected) {
  EXPECT_THROW(load_plan(R"({"spj": {"inputs": [{"table": "EMP"}], "predicate": "true", "projections": [{"col": 9}]}})",
                         catalog),
               ValidationError);
  EXPECT_THROW(load_plan(R"({"table": "NOPE"})", catalog), Error);
}

TEST_F(PlanIoTest, WorkedExampleRoundTrip) {
  QueryPtr q = testkit::corpus_query("motivating/grouped_sum_1.sql", catalog);
  std::string text = dump_plan(*q);
  QueryPtr again = load_plan(text, catalog);
  EXPECT_TRUE(same(q, again));
  EXPECT_EQ(dump_plan(*again), text);
  EXPECT_TRUE(same(load_plan(dump_plan(*q, 2), catalog), q));
}

TEST_F(PlanIoTest, CaseProjectionRoundTrip) {
  QueryPtr q = spj({table(catalog, "EMP")}, true_pred(),
                   {case_expr({{cmp(CmpOp::Gt, col(1), lit_int(0)), lit_int(1)}}, lit_int(2)),
                    lit(Literal::string("NY")), lit(Literal::decimal(Rational(5, 4))), null_expr()});
  EXPECT_TRUE(same(load_plan(dump_plan(*q), catalog), q));
}

TEST_F(PlanIoTest, OuterJoinRoundTrip) {
  QueryPtr q = parse_sql("SELECT * FROM EMP LEFT JOIN DEPT ON EMP.DEPT_ID = DEPT.DEPT_ID", catalog);
  EXPECT_TRUE(same(load_plan(dump_plan(*q), catalog), q));
}

TEST(PlanIoProperty, RandomTreesRoundTrip) {
  Catalog fuzz = testkit::fuzz_catalog();
  testkit::Generator gen(fuzz, 5);
  for (int i = 0; i < 200; ++i) {
    QueryPtr q = gen.tree(1 + i % 4);
    std::string text = dump_plan(*q);
    QueryPtr again = load_plan(text, fuzz);
    ASSERT_TRUE(same(q, again)) << text;
    EXPECT_EQ(dump_plan(*again), text);
  }
}

}  // namespace
}  // namespace bagcheck
