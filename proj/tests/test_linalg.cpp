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
#include "test_support.hpp"

#include <algorithm>
#include <limits>

using namespace slp;
using testing_support::random_cmatrix;
using testing_support::random_hermitian;
using Catch::Matchers::WithinAbs;

TEST_CASE("linalg - svd examples")
{
    const SvdResult id = svd(CMatrix::Identity(4, 4));
    CHECK((id.sigma.array() - 1.0).abs().maxCoeff() < 1e-15);

    CVector x(3), y(2);
    x << cplx(1, 2), cplx(0, -1), cplx(3, 0);
    y << cplx(0.5, 0.5), cplx(-2, 1);
    const SvdResult r1 = svd(x * y.adjoint());
    CHECK_THAT(r1.sigma(0), WithinAbs(x.norm() * y.norm(), 1e-12));
    CHECK(r1.sigma(1) < 1e-12);
    CHECK(r1.rank(1e-10) == 1);

    CMatrix bad = CMatrix::Identity(2, 2);
    bad(0, 1) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_AS(svd(bad), NumericError);
}

TEST_CASE("linalg - decomposition residuals on random shapes")
{
    std::mt19937_64 eng(17);
    const std::pair<Index, Index> shapes[] = {{4, 3}, {3, 4}, {6, 6}, {8, 4}};
    for (auto [m, n] : shapes)
        for (int trial = 0; trial < 1000; ++trial)
        {
            const CMatrix A = random_cmatrix(m, n, eng);
            const SvdResult s = svd(A);
            CMatrix S = CMatrix::Zero(m, n);
            for (Index i = 0; i < s.sigma.size(); ++i)
                S(i, i) = s.sigma(i);
            CHECK((A - s.U * S * s.V.adjoint()).norm() <= 1e-10 * s.sigma(0));
            for (Index i = 1; i < s.sigma.size(); ++i)
                CHECK(s.sigma(i) <= s.sigma(i - 1));
            CHECK(s.sigma.minCoeff() >= 0.0);

            if (m >= n)
            {
                const QrResult q = qr_decompose(A);
                CHECK((A - q.Q * q.R).norm() <= 1e-10 * A.norm());
                CHECK((q.Q.adjoint() * q.Q - CMatrix::Identity(n, n)).norm() < 1e-12);
                for (Index i = 0; i < n; ++i)
                {
                    CHECK(q.R(i, i).imag() == 0.0);
                    CHECK(q.R(i, i).real() >= 0.0);
                    for (Index j = 0; j < i; ++j)
                        CHECK(q.R(i, j) == cplx(0.0, 0.0));
                }
            }
            if (m == n)
            {
                const CMatrix Hm = random_hermitian(n, eng);
                const EigResult e = eig_hermitian(Hm);
                for (Index i = 0; i < n; ++i)
                    CHECK((Hm * e.vectors.col(i) - e.values(i) * e.vectors.col(i)).norm() <= 1e-9 * Hm.norm());
                for (Index i = 1; i < n; ++i)
                    CHECK(e.values(i) >= e.values(i - 1));
            }
        }
}

TEST_CASE("linalg - eig_hermitian examples and contract")
{
    CMatrix D = CMatrix::Zero(3, 3);
    D.diagonal() << 1.0, 2.0, 3.0;
    CHECK((eig_hermitian(D).values - RVector::LinSpaced(3, 1.0, 3.0)).norm() < 1e-14);

    CMatrix X(2, 2);
    X << 0.0, 1.0, 1.0, 0.0;
    const RVector ev = eig_hermitian(X).values;
    CHECK_THAT(ev(0), WithinAbs(-1.0, 1e-14));
    CHECK_THAT(ev(1), WithinAbs(1.0, 1e-14));

    CMatrix N(2, 2);
    N << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(eig_hermitian(N), ContractError);
}

TEST_CASE("linalg - qr examples")
{
    const QrResult id = qr_decompose(CMatrix::Identity(3, 3));
    CHECK((id.Q - CMatrix::Identity(3, 3)).norm() < 1e-15);
    CHECK((id.R - CMatrix::Identity(3, 3)).norm() < 1e-15);

    CMatrix U(3, 3);
    U << 2.0, cplx(1, 1), 0.5, 0.0, 1.0, cplx(0, 3), 0.0, 0.0, 4.0;
    const QrResult q = qr_decompose(U);
    CHECK((q.Q - CMatrix::Identity(3, 3)).norm() < 1e-14);
    CHECK((q.R - U).norm() < 1e-14);

    CHECK_THROWS_AS(qr_decompose(CMatrix::Zero(2, 3)), ContractError);
}

TEST_CASE("linalg - null space")
{
    const CMatrix Z = null_space_basis(CMatrix(CMatrix::Zero(3, 3)));
    CHECK(Z.cols() == 3);
    CHECK((Z.adjoint() * Z - CMatrix::Identity(3, 3)).norm() < 1e-12);

    std::mt19937_64 eng(23);
    CHECK(null_space_basis(random_cmatrix(4, 4, eng)).cols() == 0);

    for (int trial = 0; trial < 100; ++trial)
    {
        const CMatrix A = random_cmatrix(4, 8, eng);
        const CMatrix N = null_space_basis(A);
        REQUIRE(N.cols() == 4);
        CHECK((A * N).norm() <= 1e-12 * A.norm());
        CHECK((N.adjoint() * N - CMatrix::Identity(4, 4)).norm() < 1e-12);
    }

    // Rank-two 5x6 matrix: four-dimensional null space.
    const CMatrix low = random_cmatrix(5, 2, eng) * random_cmatrix(2, 6, eng);
    CHECK(null_space_basis(low, 1e-10).cols() == 4);
}

TEST_CASE("linalg - realify")
{
    CHECK(realify(CMatrix::Identity(2, 2)).isApprox(RMatrix::Identity(4, 4)));
    CMatrix j(1, 1);
    j(0, 0) = cplx(0, 1);
    RMatrix expect(2, 2);
    expect << 0.0, -1.0, 1.0, 0.0;
    CHECK(realify(j) == expect);
    CHECK_THROWS_AS(realify(CMatrix::Zero(2, 3)), ContractError);

    std::mt19937_64 eng(29);
    for (int trial = 0; trial < 1000; ++trial)
    {
        const CMatrix A = random_hermitian(3, eng);
        const RMatrix R = realify(A);
        CHECK((R - R.transpose()).norm() == 0.0);
        const RVector ec = eig_hermitian(A).values;
        const RVector er = eigvals_symmetric(R);
        for (Index i = 0; i < 3; ++i)
        {
            CHECK_THAT(er(2 * i), WithinAbs(ec(i), 1e-10));
            CHECK_THAT(er(2 * i + 1), WithinAbs(ec(i), 1e-10));
        }
    }
}

TEST_CASE("linalg - pseudo-inverse")
{
    std::mt19937_64 eng(31);
    const CMatrix A = random_cmatrix(4, 4, eng);
    CHECK((pinv(A) - A.inverse()).norm() < 1e-10 * A.inverse().norm());

    const CMatrix Z = pinv(CMatrix(CMatrix::Zero(2, 3)));
    CHECK(Z.rows() == 3);
    CHECK(Z.cols() == 2);
    CHECK(Z.norm() == 0.0);

    auto penrose = [](const CMatrix &M) {
        const CMatrix X = pinv(M, 1e-10);
        const double s = std::max(1.0, M.norm());
        CHECK((M * X * M - M).norm() <= 1e-8 * s);
        CHECK((X * M * X - X).norm() <= 1e-8 * std::max(1.0, X.norm()));
        CHECK((M * X - (M * X).adjoint()).norm() <= 1e-8 * s);
        CHECK((X * M - (X * M).adjoint()).norm() <= 1e-8 * s);
    };
    penrose(random_cmatrix(5, 1, eng) * random_cmatrix(1, 3, eng));
    penrose(random_cmatrix(3, 6, eng));
    penrose(random_cmatrix(6, 2, eng) * random_cmatrix(2, 6, eng));

    RMatrix R(2, 2);
    R << 2.0, 0.0, 0.0, 0.0;
    RMatrix Ri = RMatrix::Zero(2, 2);
    Ri(0, 0) = 0.5;
    CHECK(pinv(R).isApprox(Ri));
}

TEST_CASE("linalg - real null space")
{
    RMatrix A(1, 3);
    A << 1.0, 1.0, 1.0;
    const RMatrix N = null_space_basis(A);
    CHECK(N.cols() == 2);
    CHECK((A * N).norm() < 1e-14);
}
