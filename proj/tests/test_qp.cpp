// SPDX-License-Identifier: Apache-2.0
//
// slp-mimo: symbol-level precoding and MLD receivers for MU-MIMO downlink
// Copyright (C) 2026 The slp-mimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "catch_amalgamated.hpp"
#include "oracles/oracles.hpp"

using namespace slp;

namespace
{
    RMatrix random_real(Index r, Index c, std::mt19937_64 &eng)
    {
        std::normal_distribution<double> nd;
        RMatrix A(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j)
                A(i, j) = nd(eng);
        return A;
    }

    RVector random_vec(Index n, std::mt19937_64 &eng)
    {
        return random_real(n, 1, eng);
    }
} // namespace

TEST_CASE("qp - unconstrained and equality-only problems")
{
    DenseQp qp;
    qp.H = RMatrix::Identity(3, 3) * 2.0;
    qp.f = RVector::Constant(3, -2.0);
    DenseQpResult r = solve_dense_qp(qp);
    CHECK((r.x - RVector::Ones(3)).norm() < 1e-12);

    qp.A_eq = RMatrix::Ones(1, 3);
    qp.b_eq = RVector::Constant(1, 6.0);
    r = solve_dense_qp(qp);
    CHECK((r.x - RVector::Constant(3, 2.0)).norm() < 1e-12);
    CHECK(r.active.empty());
}

TEST_CASE("qp - matches exhaustive enumeration on random instances")
{
    std::mt19937_64 eng(101);
    int feasible = 0;
    for (int trial = 0; trial < 300; ++trial)
    {
        const Index n = 2 + trial % 5;
        const Index me = trial % 3 == 0 ? 0 : 1 + trial % 2;
        const Index mi = 1 + trial % 6;
        const RMatrix F = random_real(n, n, eng);
        DenseQp qp;
        qp.H = F * F.transpose() + 0.1 * RMatrix::Identity(n, n);
        qp.f = random_vec(n, eng);
        qp.A_eq = random_real(me, n, eng);
        qp.b_eq = random_vec(me, eng);
        qp.A_in = random_real(mi, n, eng);
        qp.b_in = random_vec(mi, eng);

        const oracle::QpSolution ref = oracle::enumerate_qp({qp.H, qp.f, qp.A_eq, qp.b_eq, qp.A_in, qp.b_in});
        if (!ref.feasible)
        {
            CHECK_THROWS_AS(solve_dense_qp(qp), InfeasibleError);
            continue;
        }
        ++feasible;
        const DenseQpResult r = solve_dense_qp(qp);
        CHECK(std::abs(r.objective - ref.objective) <= 1e-8 * (1.0 + std::abs(ref.objective)));
        CHECK((r.x - ref.y).norm() <= 1e-6 * (1.0 + ref.y.norm()));
        if (me)
            CHECK((qp.A_eq * r.x - qp.b_eq).lpNorm<Eigen::Infinity>() < 1e-9);
        CHECK((qp.A_in * r.x - qp.b_in).minCoeff() > -1e-9);
        CHECK(r.mu_in.minCoeff() >= -1e-10);
    }
    CHECK(feasible > 100);
}

TEST_CASE("qp - infeasible rows are reported")
{
    DenseQp qp;
    qp.H = RMatrix::Identity(1, 1);
    qp.f = RVector::Zero(1);
    qp.A_in = RMatrix(2, 1);
    qp.A_in << 1.0, -1.0;
    qp.b_in = RVector(2);
    qp.b_in << 1.0, 0.0; // x >= 1 and x <= 0
    try
    {
        solve_dense_qp(qp);
        FAIL("expected InfeasibleError");
    }
    catch (const InfeasibleError &e)
    {
        CHECK((e.row() == 0 || e.row() == 1));
    }

    DenseQp eq;
    eq.H = RMatrix::Identity(2, 2);
    eq.f = RVector::Zero(2);
    eq.A_eq = RMatrix(2, 2);
    eq.A_eq << 1.0, 1.0, 2.0, 2.0;
    eq.b_eq = RVector(2);
    eq.b_eq << 1.0, 3.0;
    CHECK_THROWS_AS(solve_dense_qp(eq), InfeasibleError);
}

TEST_CASE("qp - inconsistent dimensions")
{
    DenseQp qp;
    qp.H = RMatrix::Identity(2, 2);
    qp.f = RVector::Zero(3);
    CHECK_THROWS_AS(solve_dense_qp(qp), ContractError);
}
