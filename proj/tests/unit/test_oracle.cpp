#include <gtest/gtest.h>

#include "bagcheck/error.hpp"
#include "bagcheck/oracle.hpp"
#include "bagcheck/sql_parser.hpp"
#include "testkit.hpp"

namespace bagcheck {
namespace {

class OracleTest : public ::testing::Test {
 protected:
  Catalog catalog = testkit::corpus_catalog();

  Bag run(const std::string& sql, const Database& db) { return eval_query(parse_sql(sql, catalog), db); }

  /// Three employees sharing department and location.
  Database same_department() {
    return load_database(R"({"EMP": [[1, 10, 20, "NY"], [2, 11, 20, "NY"], [3, 12, 20, "NY"]],
                             "DEPT": [[20, "Sales"]]})",
                         catalog);
  }
};

Row row(std::initializer_list<Value> values) { return Row(values); }

TEST_F(OracleTest, SetVersusBag) {
  Database db = same_department();
  Bag q1 = eval_query(testkit::corpus_query("motivating/set_vs_bag_1.sql", catalog), db);
  Bag q2 = eval_query(testkit::corpus_query("motivating/set_vs_bag_2.sql", catalog), db);
  EXPECT_EQ(bag_size(q1), 3u);
  EXPECT_EQ(q1.size(), 1u);
  EXPECT_EQ(bag_size(q2), 1u);
  EXPECT_FALSE(bag_equal(q1, q2));
}

TEST_F(OracleTest, EmptyDatabase) {
  Database db(catalog);
  EXPECT_TRUE(run("SELECT * FROM EMP, DEPT", db).empty());
  EXPECT_TRUE(run("SELECT COUNT(*) FROM EMP", db).empty());
  EXPECT_TRUE(run("SELECT DEPT_ID, SUM(SALARY) FROM EMP GROUP BY DEPT_ID", db).empty());
}

TEST_F(OracleTest, GroupedSumByHand) {
  Database db = load_database(R"({"EMP": [[1, 5, 10, "NY"], [2, 7, 10, "NY"], [3, 4, 10, "SF"], [4, 9, 11, "NY"]],
                                  "DEPT": [[10, "A"], [11, "B"]]})",
                              catalog);
  QueryPtr q1 = testkit::corpus_query("motivating/grouped_sum_1.sql", catalog);
  QueryPtr q2 = testkit::corpus_query("motivating/grouped_sum_2.sql", catalog);
  Bag expected{{row({Value::integer(12), Value::string("NY")}), 1}, {row({Value::integer(4), Value::string("SF")}), 1}};
  EXPECT_TRUE(bag_equal(eval_query(q1, db), expected)) << to_string(eval_query(q1, db));
  EXPECT_TRUE(bag_equal(eval_query(q2, db), expected)) << to_string(eval_query(q2, db));
}

TEST_F(OracleTest, GroupedSumOnRandomDatabases) {
  QueryPtr q1 = testkit::corpus_query("motivating/grouped_sum_1.sql", catalog);
  QueryPtr q2 = testkit::corpus_query("motivating/grouped_sum_2.sql", catalog);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Database db = random_database(catalog, seed, 5, 0.1);
    EXPECT_TRUE(bag_equal(eval_query(q1, db), eval_query(q2, db))) << seed;
  }
}

TEST_F(OracleTest, BagEquality) {
  Row r = row({Value::integer(1), Value::null()});
  Row s = row({Value::integer(2), Value::string("x")});
  EXPECT_FALSE(bag_equal({{r, 3}}, {{r, 1}}));
  EXPECT_TRUE(bag_equal({}, {}));
  EXPECT_TRUE(bag_equal({{r, 1}, {s, 2}}, {{s, 2}, {r, 1}}));
  EXPECT_TRUE(bag_equal({{row({Value::null()}), 1}}, {{row({Value::null()}), 1}}));
}

TEST_F(OracleTest, AggregateDefaults) {
  Database db = load_database(R"({"LOG": [[1, null], [1, null], [2, 5], [2, null], [null, 3], [null, 4]]})", catalog);
  Bag out = run("SELECT K, SUM(V), MIN(V), MAX(V), COUNT(V), COUNT(*) FROM LOG GROUP BY K", db);
  Bag expected{
      {row({Value::integer(1), Value::null(), Value::null(), Value::null(), Value::integer(0), Value::integer(2)}), 1},
      {row({Value::integer(2), Value::integer(5), Value::integer(5), Value::integer(5), Value::integer(1),
            Value::integer(2)}),
       1},
      {row({Value::null(), Value::integer(7), Value::integer(3), Value::integer(4), Value::integer(2),
            Value::integer(2)}),
       1},
  };
  EXPECT_TRUE(bag_equal(out, expected)) << to_string(out);
}

TEST_F(OracleTest, AverageIsExact) {
  Database db = load_database(R"({"LOG": [[1, 1], [1, 2]]})", catalog);
  Bag out = run("SELECT AVG(V) FROM LOG", db);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.begin()->first[0].number(), Rational(3, 2));
}

TEST_F(OracleTest, ThreeValuedFilters) {
  Database db = load_database(R"({"LOG": [[1, null], [2, 3], [null, null]]})", catalog);
  EXPECT_EQ(bag_size(run("SELECT K FROM LOG WHERE V > 1", db)), 1u);
  EXPECT_EQ(bag_size(run("SELECT K FROM LOG WHERE NOT (V > 1)", db)), 0u);
  EXPECT_EQ(bag_size(run("SELECT K FROM LOG WHERE V > 1 OR K = 1", db)), 2u);
  EXPECT_EQ(bag_size(run("SELECT K FROM LOG WHERE V IS NULL", db)), 2u);
  EXPECT_EQ(bag_size(run("SELECT K FROM LOG WHERE V = V", db)), 1u);
}

TEST_F(OracleTest, ArithmeticEdges) {
  Database db = load_database(R"({"LOG": [[-7, 2], [7, 0]]})", catalog);
  Bag out = run("SELECT K / V, K % V FROM LOG", db);
  Bag expected{{row({Value::integer(-3), Value::integer(-1)}), 1}, {row({Value::null(), Value::null()}), 1}};
  EXPECT_TRUE(bag_equal(out, expected)) << to_string(out);
}

TEST_F(OracleTest, UninterpretedFunctionsAreDeterministic) {
  Database db = random_database(catalog, 4, 5, 0.1);
  Bag a = run("SELECT F(SALARY), G(SALARY, DEPT_ID) FROM EMP", db);
  Bag b = run("SELECT F(SALARY), G(SALARY, DEPT_ID) FROM EMP", db);
  EXPECT_TRUE(bag_equal(a, b));
}

TEST_F(OracleTest, UnionAddsMultiplicities) {
  Database db = same_department();
  EXPECT_EQ(bag_size(run("SELECT DEPT_ID FROM EMP UNION ALL SELECT DEPT_ID FROM DEPT", db)), 4u);
  EXPECT_EQ(bag_size(run("SELECT DEPT_ID FROM EMP UNION SELECT DEPT_ID FROM DEPT", db)), 1u);
}

TEST_F(OracleTest, DatabaseInvariants) {
  Database db(catalog);
  EXPECT_THROW(db.insert("EMP", {Value::integer(1)}), SchemaError);
  EXPECT_THROW(db.insert("EMP", {Value::null(), Value::integer(1), Value::integer(1), Value::string("a")}),
               SchemaError);
  db.insert("EMP", {Value::integer(1), Value::integer(1), Value::integer(1), Value::string("a")});
  EXPECT_THROW(db.insert("EMP", {Value::integer(1), Value::integer(2), Value::integer(2), Value::string("b")}),
               SchemaError);
  EXPECT_THROW(db.insert("NOPE", {}), Error);
  EXPECT_EQ(db.total_rows(), 1u);
}

TEST_F(OracleTest, DatabaseDocuments) {
  Database db = random_database(catalog, 17, 5, 0.2);
  Database again = load_database(dump_database(db), catalog);
  for (const auto& [name, _] : catalog.tables()) EXPECT_EQ(db.rows(name), again.rows(name)) << name;
  EXPECT_THROW(load_database("[1, 2]", catalog), ParseError);
}

TEST_F(OracleTest, RandomDatabaseIsDeterministic) {
  EXPECT_EQ(dump_database(random_database(catalog, 5, 5, 0.1)), dump_database(random_database(catalog, 5, 5, 0.1)));
  EXPECT_NE(dump_database(random_database(catalog, 5, 5, 0.1)), dump_database(random_database(catalog, 6, 5, 0.1)));
}

TEST_F(OracleTest, RandomDatabaseRespectsSchema) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Database db = random_database(catalog, seed, 5, 0.5);
    for (const auto& [name, schema] : catalog.tables()) {
      const auto& rows = db.rows(name);
      EXPECT_LE(rows.size(), 5u);
      std::set<Row> keys;
      for (const auto& r : rows) {
        for (std::size_t c = 0; c < schema.arity(); ++c) {
          if (!schema.columns[c].nullable) EXPECT_FALSE(r[c].is_null());
          if (!r[c].is_null() && r[c].kind() == Value::Kind::Int) {
            EXPECT_GE(r[c].number(), Rational(0));
            EXPECT_LE(r[c].number(), Rational(9));
          }
        }
        if (schema.primary_key) {
          Row key;
          for (std::size_t c : *schema.primary_key) key.push_back(r[c]);
          EXPECT_TRUE(keys.insert(key).second);
        }
      }
    }
  }
}

TEST_F(OracleTest, NoNullsAtRateZero) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Database db = random_database(catalog, seed, 5, 0.0);
    for (const auto& [name, _] : catalog.tables()) {
      for (const auto& r : db.rows(name)) {
        for (const auto& v : r) EXPECT_FALSE(v.is_null());
      }
    }
  }
}

TEST_F(OracleTest, NullFrequencyTracksRate) {
  for (double rate : {0.1, 0.3}) {
    std::map<std::pair<std::string, std::size_t>, std::pair<std::size_t, std::size_t>> seen;  // nulls, total
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      Database db = random_database(catalog, seed, 5, rate);
      for (const auto& [name, schema] : catalog.tables()) {
        for (const auto& r : db.rows(name)) {
          for (std::size_t c = 0; c < schema.arity(); ++c) {
            if (!schema.columns[c].nullable) continue;
            auto& [nulls, total] = seen[{name, c}];
            nulls += r[c].is_null();
            ++total;
          }
        }
      }
    }
    for (const auto& [column, counts] : seen) {
      double observed = static_cast<double>(counts.first) / static_cast<double>(counts.second);
      EXPECT_NEAR(observed, rate, 0.05) << column.first << "." << column.second;
    }
  }
}

TEST(Values, OrderingAndEquality) {
  EXPECT_EQ(Value::null(), Value::null());
  EXPECT_LT(Value::null(), Value::integer(-5));
  EXPECT_EQ(Value::integer(2), Value::decimal(Rational(2)));
  EXPECT_EQ(Value::string("abc"), Value::string("abc"));
  EXPECT_NE(Value::string("abc"), Value::string("abd"));
  EXPECT_EQ(Value::of_type(SqlType::Int, Rational(3)).kind(), Value::Kind::Int);
  EXPECT_EQ(Value::decimal(Rational(5, 2)).to_string(), "2.5");
  EXPECT_EQ(Value::null().to_string(), "NULL");
}

}  // namespace
}  // namespace bagcheck
