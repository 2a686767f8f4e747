#include <gtest/gtest.h>

#include "bagcheck/error.hpp"
#include "bagcheck/ir.hpp"
#include "bagcheck/oracle.hpp"
#include "testkit.hpp"

namespace bagcheck {
namespace {

class IrTest : public ::testing::Test {
 protected:
  Catalog catalog = testkit::corpus_catalog();
  QueryPtr emp = table(catalog, "EMP");
  QueryPtr dept = table(catalog, "DEPT");
};

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST_F(IrTest, Arity) {
  EXPECT_EQ(arity(emp), 4u);
  QueryPtr q = agg(emp, {3}, {{AggKind::Sum, 1}});
  EXPECT_EQ(arity(q), 2u);
  EXPECT_EQ(arity(empty_table(3)), 3u);
  EXPECT_EQ(arity(spj({emp, dept}, true_pred(), {col(0), col(5)})), 2u);
  EXPECT_EQ(arity(union_all({emp, emp})), 4u);
}

TEST_F(IrTest, ValidTree) {
  QueryPtr q1 = spj({emp}, cmp(CmpOp::Gt, col(2), lit_int(10)), {col(2), col(3)});
  EXPECT_TRUE(validate(*q1, catalog).empty());
  EXPECT_NO_THROW(require_valid(*q1, catalog));
}

TEST_F(IrTest, IndexOutOfRange) {
  QueryPtr q = spj({emp}, true_pred(), {col(9)});
  auto problems = validate(*q, catalog);
  ASSERT_FALSE(problems.empty());
  EXPECT_TRUE(mentions(problems, "index out of range"));
  EXPECT_THROW(require_valid(*q, catalog), ValidationError);
}

TEST_F(IrTest, UnionArityMismatch) {
  QueryPtr q = union_all({spj({emp}, true_pred(), {col(0), col(1)}), spj({emp}, true_pred(), {col(0), col(1), col(2)})});
  EXPECT_TRUE(mentions(validate(*q, catalog), "arity mismatch"));
}

TEST_F(IrTest, AggregateOperands) {
  EXPECT_FALSE(validate(*agg(emp, {7}, {}), catalog).empty());
  EXPECT_FALSE(validate(*agg(emp, {}, {{AggKind::Sum, AggFunc::kStar}}), catalog).empty());
  EXPECT_TRUE(validate(*agg(emp, {}, {{AggKind::Count, AggFunc::kStar}}), catalog).empty());
}

TEST_F(IrTest, ConjoinAndConjuncts) {
  PredPtr a = cmp(CmpOp::Gt, col(0), lit_int(1));
  PredPtr b = cmp(CmpOp::Lt, col(1), lit_int(2));
  EXPECT_TRUE(same(conjoin(true_pred(), a), a));
  EXPECT_TRUE(as<pred::False>(conjoin(a, false_pred())));
  auto parts = conjuncts(and_pred(a, and_pred(b, a)));
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_TRUE(same(parts[1], b));
  EXPECT_TRUE(conjuncts(true_pred()).empty() || as<pred::True>(conjuncts(true_pred())[0]));
}

TEST_F(IrTest, SubstituteAndShift) {
  std::vector<ExprPtr> repl{arith(ArithOp::Add, col(4), lit_int(1)), col(7)};
  ExprPtr e = arith(ArithOp::Mul, col(0), col(1));
  EXPECT_TRUE(same(substitute(e, repl), arith(ArithOp::Mul, arith(ArithOp::Add, col(4), lit_int(1)), col(7))));
  EXPECT_TRUE(same(shift(e, 3), arith(ArithOp::Mul, col(3), col(4))));
  std::set<std::size_t> used;
  collect_columns(cmp(CmpOp::Eq, col(2), col(5)), used);
  EXPECT_EQ(used, (std::set<std::size_t>{2, 5}));
}

TEST_F(IrTest, OutputTypes) {
  QueryPtr q = spj({emp}, true_pred(),
                   {col(3), arith(ArithOp::Add, col(1), lit(Literal::decimal(Rational(1, 2)))), lit(Literal::boolean(true))});
  auto types = output_types(*q);
  ASSERT_EQ(types.size(), 3u);
  EXPECT_EQ(types[0], SqlType::Varchar);
  EXPECT_EQ(types[1], SqlType::Decimal);
  EXPECT_EQ(types[2], SqlType::Bool);
  auto agg_types = output_types(*agg(emp, {2}, {{AggKind::Count, 1}, {AggKind::Max, 3}}));
  EXPECT_EQ(agg_types, (std::vector<SqlType>{SqlType::Int, SqlType::Int, SqlType::Varchar}));
}

TEST_F(IrTest, FootprintAndSize) {
  QueryPtr q = spj({emp, agg(dept, {0}, {})}, true_pred(), {col(0)});
  EXPECT_EQ(footprint(*q), (std::set<std::string>{"DEPT", "EMP"}));
  EXPECT_EQ(node_count(*q), 4u);
}

TEST_F(IrTest, StructuralEquality) {
  QueryPtr a = spj({emp}, cmp(CmpOp::Gt, col(2), lit_int(10)), {col(2)});
  QueryPtr b = spj({table(catalog, "emp")}, cmp(CmpOp::Gt, col(2), lit_int(10)), {col(2)});
  QueryPtr c = spj({emp}, cmp(CmpOp::Ge, col(2), lit_int(10)), {col(2)});
  EXPECT_TRUE(same(a, b));
  EXPECT_FALSE(same(a, c));
}

TEST_F(IrTest, StringCodesAreStable) {
  EXPECT_EQ(string_code("NY"), string_code("NY"));
  EXPECT_NE(string_code("NY"), string_code("SF"));
}

// Trees that validate evaluate without faults.
TEST(IrProperty, ValidTreesEvaluate) {
  Catalog fuzz = testkit::fuzz_catalog();
  testkit::Generator gen(fuzz, 11);
  for (int i = 0; i < 100; ++i) {
    QueryPtr q = gen.tree(1 + i % 3);
    ASSERT_TRUE(validate(*q, fuzz).empty());
    Database db = random_database(fuzz, static_cast<std::uint64_t>(i), 4, 0.2);
    Bag out = eval_query(q, db);
    for (const auto& [row, n] : out) {
      EXPECT_EQ(row.size(), arity(q));
      EXPECT_GE(n, 1u);
    }
  }
}

}  // namespace
}  // namespace bagcheck
