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

#ifndef SLP_LINALG_HPP
#define SLP_LINALG_HPP

#include "slp/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace slp
{
    struct SvdResult
    {
        CMatrix U;     // rows x rows
        RVector sigma; // descending, length min(rows, cols)
        CMatrix V;     // cols x cols

        Index rank(double tol) const
        {
            if (sigma.size() == 0 || sigma(0) <= 0.0)
                return 0;
            Index r = 0;
            while (r < sigma.size() && sigma(r) > tol * sigma(0))
                ++r;
            return r;
        }
    };

    struct EigResult
    {
        RVector values; // ascending
        CMatrix vectors;
    };

    struct QrResult
    {
        CMatrix Q; // rows x cols, orthonormal columns
        CMatrix R; // cols x cols, upper triangular, real nonnegative diagonal
    };

    inline double default_rank_tol(Index rows, Index cols)
    {
        return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
    }

    inline double spectral_norm(const CMatrix &A)
    {
        if (A.size() == 0)
            return 0.0;
        Eigen::JacobiSVD<CMatrix> svd(A);
        return svd.singularValues()(0);
    }

    inline SvdResult svd(const CMatrix &A)
    {
        if (!A.allFinite())
            throw NumericError("svd: non-finite entries");
        SvdResult r;
        if (A.size() == 0)
        {
            r.U = CMatrix::Identity(A.rows(), A.rows());
            r.V = CMatrix::Identity(A.cols(), A.cols());
            r.sigma.resize(0);
            return r;
        }
        Eigen::JacobiSVD<CMatrix> s(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
        r.U = s.matrixU();
        r.sigma = s.singularValues();
        r.V = s.matrixV();
        return r;
    }

    inline EigResult eig_hermitian(const CMatrix &A)
    {
        if (A.rows() != A.cols())
            throw ContractError("eig_hermitian: matrix is not square");
        const double scale = A.size() ? A.norm() : 0.0;
        if ((A - A.adjoint()).norm() > 1e-10 * std::max(scale, 1e-300))
            throw ContractError("eig_hermitian: matrix is not Hermitian");
        if (!A.allFinite())
            throw NumericError("eig_hermitian: non-finite entries");
        const CMatrix H = 0.5 * (A + A.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
        return {es.eigenvalues(), es.eigenvectors()};
    }

    inline RVector eigvals_symmetric(const RMatrix &A)
    {
        Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    inline QrResult qr_decompose(const CMatrix &A)
    {
        if (A.rows() < A.cols())
            throw ContractError("qr_decompose: rows < cols");
        if (!A.allFinite())
            throw NumericError("qr_decompose: non-finite entries");
        const Index m = A.rows(), n = A.cols();
        Eigen::HouseholderQR<CMatrix> qr(A);
        QrResult r;
        r.Q = qr.householderQ() * CMatrix::Identity(m, n);
        r.R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        for (Index i = 0; i < n; ++i)
        {
            const cplx d = r.R(i, i);
            const double mag = std::abs(d);
            const cplx phase = mag > 0.0 ? d / mag : cplx(1.0, 0.0);
            r.R.row(i) *= std::conj(phase);
            r.Q.col(i) *= phase;
            r.R(i, i) = cplx(mag, 0.0);
        }
        return r;
    }

    // Orthonormal basis of {x : A x = 0}; tol is relative to sigma_1.
    inline CMatrix null_space_basis(const CMatrix &A, double tol = -1.0)
    {
        if (!A.allFinite())
            throw NumericError("null_space_basis: non-finite entries");
        const Index n = A.cols();
        if (A.rows() == 0)
            return CMatrix::Identity(n, n);
        if (tol < 0.0)
            tol = default_rank_tol(A.rows(), A.cols());
        const SvdResult s = svd(A);
        const Index r = s.rank(tol);
        return s.V.rightCols(n - r);
    }

    // Orthonormal basis of range(A).
    inline CMatrix range_basis(const CMatrix &A, double tol = -1.0)
    {
        if (tol < 0.0)
            tol = default_rank_tol(A.rows(), A.cols());
        if (A.size() == 0)
            return CMatrix(A.rows(), 0);
        const SvdResult s = svd(A);
        return s.U.leftCols(s.rank(tol));
    }

    inline RMatrix realify(const CMatrix &A)
    {
        if (A.rows() != A.cols())
            throw ContractError("realify: matrix is not square");
        const Index n = A.rows();
        RMatrix R(2 * n, 2 * n);
        R.topLeftCorner(n, n) = A.real();
        R.topRightCorner(n, n) = -A.imag();
        R.bottomLeftCorner(n, n) = A.imag();
        R.bottomRightCorner(n, n) = A.real();
        return R;
    }

    inline CMatrix pinv(const CMatrix &A, double tol = -1.0)
    {
        if (A.size() == 0)
            return CMatrix::Zero(A.cols(), A.rows());
        if (tol < 0.0)
            tol = default_rank_tol(A.rows(), A.cols());
        const SvdResult s = svd(A);
        const Index r = s.rank(tol);
        CMatrix out = CMatrix::Zero(A.cols(), A.rows());
        for (Index i = 0; i < r; ++i)
            out += s.V.col(i) * (1.0 / s.sigma(i)) * s.U.col(i).adjoint();
        return out;
    }

    inline RMatrix pinv(const RMatrix &A, double tol = -1.0)
    {
        if (A.size() == 0)
            return RMatrix::Zero(A.cols(), A.rows());
        if (tol < 0.0)
            tol = default_rank_tol(A.rows(), A.cols());
        Eigen::JacobiSVD<RMatrix> s(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVector &sig = s.singularValues();
        RMatrix out = RMatrix::Zero(A.cols(), A.rows());
        for (Index i = 0; i < sig.size() && sig(0) > 0.0 && sig(i) > tol * sig(0); ++i)
            out += s.matrixV().col(i) * (1.0 / sig(i)) * s.matrixU().col(i).transpose();
        return out;
    }

    // Orthonormal basis of the null space of a real matrix.
    inline RMatrix null_space_basis(const RMatrix &A, double tol = -1.0)
    {
        const Index n = A.cols();
        if (A.rows() == 0)
            return RMatrix::Identity(n, n);
        if (tol < 0.0)
            tol = default_rank_tol(A.rows(), A.cols());
        Eigen::JacobiSVD<RMatrix> s(A, Eigen::ComputeFullV);
        const RVector &sig = s.singularValues();
        Index r = 0;
        while (r < sig.size() && sig(0) > 0.0 && sig(r) > tol * sig(0))
            ++r;
        return s.matrixV().rightCols(n - r);
    }

} // namespace slp

#endif
