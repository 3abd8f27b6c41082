#include <gtest/gtest.h>

#include <cmath>

#include "stclear/clearing_lp.hpp"
#include "stclear/scenario.hpp"
#include "stclear/simplex.hpp"
#include "support/fixtures.hpp"
#include "support/vertex_oracle.hpp"

using namespace stclear;

TEST(AssemblePrimal, TwoVariableMarket) {
  const auto p = assemble_primal(fixtures::two_variable());
  const auto& lp = p.lp;
  ASSERT_EQ(lp.rows(), 1u);
  ASSERT_EQ(lp.cols(), 2u);
  EXPECT_EQ(lp.sense(), ObjectiveSense::Maximize);
  EXPECT_EQ(p.index.id(0), "g1");
  EXPECT_EQ(p.index.id(1), "d1");
  EXPECT_EQ(lp.objective(0), -2.0);
  EXPECT_EQ(lp.objective(1), 8.0);
  EXPECT_EQ(lp.upper(0), 10.0);
  EXPECT_EQ(lp.upper(1), 5.0);
  EXPECT_EQ(lp.column(0)[0].value, 1.0);
  EXPECT_EQ(lp.column(1)[0].value, -1.0);
  EXPECT_EQ(lp.rhs()[0], 0.0);
  EXPECT_EQ(lp.row_labels()[0], "n1@0:good");
}

TEST(AssemblePrimal, StorageIncidence) {
  const auto p = assemble_primal(fixtures::storage());
  ASSERT_EQ(p.lp.rows(), 2u);
  const auto col = p.lp.column(*p.index.column_of("s1"));
  ASSERT_EQ(col.size(), 2u);
  EXPECT_EQ(p.index.row(col[0].row).time, 0u);
  EXPECT_EQ(col[0].value, -1.0);
  EXPECT_EQ(p.index.row(col[1].row).time, 1u);
  EXPECT_EQ(col[1].value, 1.0);
}

TEST(AssemblePrimal, TechnologyYields) {
  MarketInstance m;
  m.products = {"biogas", "waste"};
  m.nodes = {"n1"};
  m.technologies = {{"m1", {"n1", 0}, {{"waste", 1.0}}, {{"biogas", 2.0}}, "waste", 3.0, 1.0}};
  const auto p = assemble_primal(m);
  const auto col = p.lp.column(0);
  ASSERT_EQ(col.size(), 2u);
  const auto waste = *p.index.row_of({0, "n1", "waste"});
  const auto gas = *p.index.row_of({0, "n1", "biogas"});
  for (const auto& e : col) {
    EXPECT_EQ(e.value, e.row == waste ? -1.0 : 2.0);
    EXPECT_TRUE(e.row == waste || e.row == gas);
  }
}

TEST(AssemblePrimal, RowsOnlyForParticipatingPairs) {
  const auto m = fixtures::storage();
  const auto p = assemble_primal(m);
  // 1 node x 2 times x 1 product = 2 pairs, both touched.
  EXPECT_EQ(p.lp.rows(), 2u);
  const auto t = assemble_primal(fixtures::two_node_transport());
  EXPECT_EQ(t.lp.rows(), 2u);
  EXPECT_FALSE(t.index.row_of({0, "n3", "good"}).has_value());
}

TEST(AssemblePrimal, InvalidInstanceRejected) {
  auto m = fixtures::two_variable();
  m.suppliers[0].capacity = -1.0;
  EXPECT_THROW(assemble_primal(m), Error);
}

TEST(AssemblePrimal, StructuralInvariantsOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto m = random_instance(seed);
    const auto p = assemble_primal(m);
    for (std::size_t j = 0; j < p.lp.cols(); ++j) {
      EXPECT_EQ(p.lp.lower(j), 0.0);
      EXPECT_TRUE(std::isfinite(p.lp.upper(j)));
      const ColumnRef& ref = p.index.column(j);
      if (ref.cls == StakeholderClass::Transporter) {
        ASSERT_EQ(p.lp.column(j).size(), 2u);
        EXPECT_EQ(p.lp.column(j)[0].value + p.lp.column(j)[1].value, 0.0);
      }
      if (ref.cls == StakeholderClass::Technology) {
        const auto& tech = m.technologies[ref.index];
        EXPECT_EQ(p.lp.column(j).size(), tech.inputs.size() + tech.outputs.size());
      }
    }
    for (double b : p.lp.rhs()) EXPECT_EQ(b, 0.0);
    // Zero allocation is feasible.
    const std::vector<double> zero(p.lp.cols(), 0.0);
    for (double r : row_residuals(p.lp, zero)) EXPECT_EQ(r, 0.0);
    // Column order: class blocks, ids ascending within a block.
    for (std::size_t j = 1; j < p.lp.cols(); ++j) {
      const auto a = p.index.column(j - 1).cls;
      const auto b = p.index.column(j).cls;
      EXPECT_TRUE(a < b || (a == b && p.index.id(j - 1) < p.index.id(j)));
    }
  }
}

TEST(AssembleDual, TwoVariableMarketByEnumeration) {
  const auto d = assemble_dual(fixtures::two_variable());
  EXPECT_EQ(d.lp.sense(), ObjectiveSense::Minimize);
  EXPECT_EQ(d.lp.rows(), 2u);
  // Objective: 10 lambda_g + 5 lambda_d over free pi.
  EXPECT_EQ(d.lp.objective(d.lambda_column(0)), 10.0);
  EXPECT_EQ(d.lp.objective(d.lambda_column(1)), 5.0);

  // Enumerate the 3-variable dual on a box wide enough to hold the optimum.
  LinearProgram boxed(d.lp.rows(), d.lp.sense());
  for (std::size_t j = 0; j < d.lp.cols(); ++j) {
    const auto col = d.lp.column(j);
    boxed.add_column("", d.lp.objective(j), std::isfinite(d.lp.lower(j)) ? d.lp.lower(j) : -100.0,
                     std::isfinite(d.lp.upper(j)) ? d.lp.upper(j) : 100.0, {col.begin(), col.end()});
  }
  for (std::size_t r = 0; r < d.lp.rows(); ++r) boxed.set_rhs(r, d.lp.rhs()[r]);
  const auto o = oracle::enumerate(boxed);
  ASSERT_TRUE(o.feasible);
  EXPECT_NEAR(o.objective, 30.0, 1e-12);
  EXPECT_NEAR(o.x[d.price_column(0)], 2.0, 1e-12);
  EXPECT_NEAR(o.x[d.lambda_column(1)], 6.0, 1e-12);

  const auto r = solve(d.lp);
  ASSERT_EQ(r.status, SolverStatus::Optimal);
  EXPECT_NEAR(r.objective, 30.0, 1e-9);
}

TEST(AssembleDual, DryMarketZero) {
  const auto d = assemble_dual(fixtures::dry());
  const auto r = solve(d.lp);
  ASSERT_EQ(r.status, SolverStatus::Optimal);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
  for (std::size_t j = 0; j < d.index.columns(); ++j) EXPECT_NEAR(r.x[d.lambda_column(j)], 0.0, 1e-12);
}

TEST(AssembleDual, EmptyInstance) {
  const auto d = assemble_dual(fixtures::empty());
  EXPECT_EQ(d.lp.rows(), 0u);
  const auto r = solve(d.lp);
  EXPECT_EQ(r.status, SolverStatus::Optimal);
  EXPECT_EQ(r.objective, 0.0);
}

TEST(AssembleDual, StrongDualityOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto m = random_instance(seed);
    const auto primal = solve(assemble_primal(m).lp);
    const auto dual = solve(assemble_dual(m).lp);
    ASSERT_EQ(primal.status, SolverStatus::Optimal) << seed;
    ASSERT_EQ(dual.status, SolverStatus::Optimal) << seed;
    EXPECT_NEAR(primal.objective, dual.objective, 1e-6 * (1.0 + std::abs(primal.objective))) << seed;
  }
}

TEST(AssemblePrimal, SurplusIsSumOverPeriods) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto m = random_instance(seed);
    const auto p = assemble_primal(m);
    const auto r = solve(p.lp);
    ASSERT_EQ(r.status, SolverStatus::Optimal);
    // Group columns by the time of their (base) location.
    std::vector<double> by_time(m.grid.size(), 0.0);
    for (std::size_t j = 0; j < p.lp.cols(); ++j) {
      const ColumnRef& ref = p.index.column(j);
      std::size_t t = 0;
      switch (ref.cls) {
        case StakeholderClass::Supplier: t = m.suppliers[ref.index].location.time; break;
        case StakeholderClass::Consumer: t = m.consumers[ref.index].location.time; break;
        case StakeholderClass::Transporter: t = m.transporters[ref.index].arc.base.time; break;
        case StakeholderClass::Technology: t = m.technologies[ref.index].location.time; break;
      }
      by_time[t] += p.lp.objective(j) * r.x[j];
    }
    double total = 0.0;
    for (double v : by_time) total += v;
    EXPECT_NEAR(total, r.objective, 1e-9 * (1.0 + std::abs(r.objective)));
  }
}

TEST(RowResiduals, Arithmetic) {
  const auto lp = assemble_primal(fixtures::two_variable()).lp;
  EXPECT_EQ(row_residuals(lp, std::vector<double>{0.0, 0.0})[0], 0.0);
  EXPECT_EQ(row_residuals(lp, std::vector<double>{5.0, 5.0})[0], 0.0);
  EXPECT_EQ(row_residuals(lp, std::vector<double>{5.0, 4.0})[0], 1.0);
  EXPECT_THROW(row_residuals(lp, std::vector<double>{1.0}), Error);
}
