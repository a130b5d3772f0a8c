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

#ifndef SLP_SOLVERS_HPP
#define SLP_SOLVERS_HPP

#include "slp/common.hpp"
#include "slp/constellation.hpp"
#include "slp/linalg.hpp"
#include "slp/qp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace slp
{
    // minimize u'Qu  subject to  sum(u) = 1,  u_i >= 0 for i < nonneg_count.
    struct SimplexQp
    {
        RMatrix Q;
        Index nonneg_count = 0;
    };

    struct DualVector
    {
        RVector u;
    };

    struct KktReport
    {
        double stationarity = 0.0;
        double primal = 0.0;
        double dual = 0.0;
        double complementarity = 0.0;

        double max() const { return std::max({stationarity, primal, dual, complementarity}); }
    };

    namespace detail
    {
        inline void check_simplex_qp(const SimplexQp &prob)
        {
            const Index n = prob.Q.rows();
            if (n == 0 || prob.Q.cols() != n)
                throw ContractError("simplex QP: Q must be square and nonempty");
            if (prob.nonneg_count < 0 || prob.nonneg_count > n)
                throw ContractError("simplex QP: nonneg_count exceeds the dimension");
            const double scale = std::max(prob.Q.norm(), 1e-300);
            if ((prob.Q - prob.Q.transpose()).norm() > 1e-10 * scale)
                throw ContractError("simplex QP: Q is not symmetric");
            if (!prob.Q.allFinite())
                throw NumericError("simplex QP: non-finite Q");
        }

        // Minimizer of u'Qu over {sum u = 1, u_W = 0}; returns false when the reduced KKT matrix is singular.
        inline bool simplex_eqp(const RMatrix &Q, const std::vector<char> &pinned, RVector &u, double &lambda)
        {
            const Index n = Q.rows();
            std::vector<Index> free;
            for (Index i = 0; i < n; ++i)
                if (!pinned[static_cast<std::size_t>(i)])
                    free.push_back(i);
            const Index f = static_cast<Index>(free.size());
            RMatrix K = RMatrix::Zero(f + 1, f + 1);
            RVector rhs = RVector::Zero(f + 1);
            for (Index a = 0; a < f; ++a)
            {
                for (Index b = 0; b < f; ++b)
                    K(a, b) = 2.0 * Q(free[a], free[b]);
                K(a, f) = -1.0;
                K(f, a) = 1.0;
            }
            rhs(f) = 1.0;
            Eigen::FullPivLU<RMatrix> lu(K);
            if (!lu.isInvertible())
                return false;
            const RVector sol = lu.solve(rhs);
            u = RVector::Zero(n);
            for (Index a = 0; a < f; ++a)
                u(free[a]) = sol(a);
            lambda = sol(f);
            return true;
        }
    } // namespace detail

    inline DualVector solve_simplex_qp(const SimplexQp &prob)
    {
        detail::check_simplex_qp(prob);
        const Index n = prob.Q.rows();
        const Index nn = prob.nonneg_count;
        const RMatrix Q = 0.5 * (prob.Q + prob.Q.transpose());
        const double qscale = Q.cwiseAbs().maxCoeff();
        if (eigvals_symmetric(Q)(0) < -1e-10 * std::max(qscale, 1e-300))
            throw NumericError("simplex QP: Q is not positive semidefinite");

        std::vector<char> pinned(static_cast<std::size_t>(n), 0);
        RVector u;
        double lambda = 0.0;
        if (detail::simplex_eqp(Q, pinned, u, lambda) && (nn == 0 || u.head(nn).minCoeff() >= 0.0))
            return {u};

        // Feasible start: the closed form with negative constrained entries clipped, then rescaled.
        RVector x = RVector::Constant(n, 1.0 / static_cast<double>(n));
        if (u.size() == n && u.allFinite())
        {
            RVector c = u;
            for (Index i = 0; i < nn; ++i)
                c(i) = std::max(c(i), 0.0);
            const double total = c.sum();
            if (total > 1e-12)
                x = c / total;
        }
        for (Index i = 0; i < nn; ++i)
            pinned[static_cast<std::size_t>(i)] = x(i) <= 0.0;

        const int max_iter = 100 * static_cast<int>(n + 1);
        for (int iter = 0; iter < max_iter; ++iter)
        {
            // Step toward the minimizer of the current working-set problem.
            RVector target;
            if (!detail::simplex_eqp(Q, pinned, target, lambda))
                throw NumericError("simplex QP: singular reduced KKT system");
            const RVector d = target - x;
            const double step_scale = 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>());
            if (d.lpNorm<Eigen::Infinity>() <= step_scale)
            {
                const RVector g = 2.0 * Q * target;
                Index release = -1;
                double most_negative = -1e-12 * (1.0 + g.lpNorm<Eigen::Infinity>());
                for (Index i = 0; i < nn; ++i)
                    if (pinned[static_cast<std::size_t>(i)])
                    {
                        const double mu = g(i) - lambda;
                        if (mu < most_negative)
                        {
                            most_negative = mu;
                            release = i;
                        }
                    }
                x = target;
                if (release < 0)
                    return {x};
                pinned[static_cast<std::size_t>(release)] = 0;
                continue;
            }
            double alpha = 1.0;
            Index blocking = -1;
            for (Index i = 0; i < nn; ++i)
                if (!pinned[static_cast<std::size_t>(i)] && d(i) < 0.0)
                {
                    const double ratio = -x(i) / d(i);
                    if (ratio < alpha)
                    {
                        alpha = ratio;
                        blocking = i;
                    }
                }
            x += alpha * d;
            if (blocking >= 0)
            {
                x(blocking) = 0.0;
                pinned[static_cast<std::size_t>(blocking)] = 1;
            }
        }
        throw NumericError("simplex QP: active-set iteration limit reached");
    }

    inline KktReport kkt_residuals(const SimplexQp &prob, const DualVector &sol)
    {
        detail::check_simplex_qp(prob);
        const Index n = prob.Q.rows();
        const Index nn = prob.nonneg_count;
        if (sol.u.size() != n)
            throw ContractError("kkt_residuals: solution length does not match the problem");
        const RVector &u = sol.u;
        const RVector g = 2.0 * prob.Q * u;
        const double gscale = std::max(1.0, g.lpNorm<Eigen::Infinity>());

        std::vector<char> at_bound(static_cast<std::size_t>(n), 0);
        double lambda = 0.0;
        Index nfree = 0;
        for (Index i = 0; i < n; ++i)
        {
            at_bound[static_cast<std::size_t>(i)] = i < nn && u(i) <= 1e-10;
            if (!at_bound[static_cast<std::size_t>(i)])
            {
                lambda += g(i);
                ++nfree;
            }
        }
        if (nfree > 0)
            lambda /= static_cast<double>(nfree);

        KktReport r;
        r.primal = std::abs(u.sum() - 1.0);
        for (Index i = 0; i < nn; ++i)
            r.primal = std::max(r.primal, -u(i));
        for (Index i = 0; i < n; ++i)
        {
            const double resid = g(i) - lambda;
            if (at_bound[static_cast<std::size_t>(i)])
            {
                r.dual = std::max(r.dual, -resid / gscale);
                r.complementarity = std::max(r.complementarity, std::abs(resid * u(i)));
            }
            else
                r.stationarity = std::max(r.stationarity, std::abs(resid) / gscale);
        }
        return r;
    }

    // Optional constructive-interference coupling for the full-rank-promoting precoder:
    // G [z Pi s; x2] = B Gamma with Gamma_O >= t, Gamma_I = t, t >= 0.
    struct CiCoupling
    {
        CMatrix G;                // KL x N_T, columns ordered as the transmit antennas
        IndexPartition partition; // outer/inner components of s
    };

    struct MinEigProblem
    {
        CVector s;     // length K*L
        Index K = 1;
        Index L = 1;
        double p = 1.0;
        std::optional<CiCoupling> ci;

        Index dimension() const { return K * L; }
    };

    struct MinEigSolution
    {
        CMatrix P1;     // KL x KL Hermitian
        double z = 0.0; // minimum eigenvalue of P1 on the complement of the alignment null space
        CMatrix P2;     // (N_T - KL) x KL, present only with CI coupling
        RVector gamma;  // CI scaling at the optimum (coupled variant)
        double t = 0.0; // CI margin (coupled variant)
        int iterations = 0;
    };

    // The alignment constraints P1 (s - K s_k^embed) = 0 confine P1 to act on the
    // orthogonal complement of N = span{s - K s_k^embed}.
    struct AlignmentGeometry
    {
        CMatrix null_basis; // orthonormal basis of N
        CMatrix perp_basis; // orthonormal basis of the complement
        CMatrix projector;  // onto the complement
        CVector w;          // projector * s
    };

    inline CVector embed_user_block(const CVector &s, Index k, Index L)
    {
        CVector e = CVector::Zero(s.size());
        e.segment(k * L, L) = s.segment(k * L, L);
        return e;
    }

    inline AlignmentGeometry alignment_geometry(const CVector &s, Index K, Index L)
    {
        const Index n = K * L;
        if (s.size() != n)
            throw ContractError("alignment geometry: symbol vector length is not K*L");
        CMatrix N(n, K);
        for (Index k = 0; k < K; ++k)
            N.col(k) = s - static_cast<double>(K) * embed_user_block(s, k, L);
        AlignmentGeometry g;
        const double tol = 1e-10;
        const SvdResult sv = svd(N);
        const Index r = N.norm() > 0.0 ? sv.rank(tol) : 0;
        g.null_basis = sv.U.leftCols(r);
        g.perp_basis = sv.U.rightCols(n - r);
        g.projector = g.perp_basis * g.perp_basis.adjoint();
        g.w = g.projector * s;
        return g;
    }

    namespace detail
    {
        // B maps the 2KL real scaling vector to the complex signal: (B Gamma)_i = g_2i Re s_i + j g_2i+1 Im s_i.
        inline RMatrix realified_basis(const CVector &s)
        {
            const Index n = s.size();
            RMatrix B = RMatrix::Zero(2 * n, 2 * n);
            for (Index i = 0; i < n; ++i)
            {
                B(i, 2 * i) = s(i).real();
                B(n + i, 2 * i + 1) = s(i).imag();
            }
            return B;
        }

        inline RVector stack_real(const CVector &v)
        {
            RVector out(2 * v.size());
            out << v.real(), v.imag();
            return out;
        }

        inline RMatrix realify_rect(const CMatrix &A)
        {
            RMatrix R(2 * A.rows(), 2 * A.cols());
            R << A.real(), -A.imag(), A.imag(), A.real();
            return R;
        }

        // Append the CI structure on Gamma (and implicitly t): Gamma_I equal to a common
        // margin, Gamma_O at least that margin, margin nonnegative.
        inline void append_ci_rows(const IndexPartition &part, Index dim, std::vector<RVector> &eq_rows, std::vector<RVector> &in_rows)
        {
            if (!part.inner_indices.empty())
            {
                const Index i0 = part.inner_indices.front();
                for (std::size_t j = 1; j < part.inner_indices.size(); ++j)
                {
                    RVector row = RVector::Zero(dim);
                    row(part.inner_indices[j]) = 1.0;
                    row(i0) = -1.0;
                    eq_rows.push_back(row);
                }
                for (Index o : part.outer_indices)
                {
                    RVector row = RVector::Zero(dim);
                    row(o) = 1.0;
                    row(i0) = -1.0;
                    in_rows.push_back(row);
                }
                RVector row = RVector::Zero(dim);
                row(i0) = 1.0;
                in_rows.push_back(row);
            }
            else
                for (Index o : part.outer_indices)
                {
                    RVector row = RVector::Zero(dim);
                    row(o) = 1.0;
                    in_rows.push_back(row);
                }
        }

        inline RMatrix stack_rows(const std::vector<RVector> &rows, Index dim)
        {
            RMatrix A(static_cast<Index>(rows.size()), dim);
            for (std::size_t i = 0; i < rows.size(); ++i)
                A.row(static_cast<Index>(i)) = rows[i].transpose();
            return A;
        }

        inline double ci_margin(const RVector &gamma, const IndexPartition &part)
        {
            if (!part.inner_indices.empty())
            {
                double acc = 0.0;
                for (Index i : part.inner_indices)
                    acc += gamma(i);
                return acc / static_cast<double>(part.inner_indices.size());
            }
            double m = std::numeric_limits<double>::infinity();
            for (Index o : part.outer_indices)
                m = std::min(m, gamma(o));
            return m;
        }

        // QP in Gamma at z = 1: minimize ||x2||^2 where G2 x2 = B Gamma - G1 w is solved in
        // the least-norm sense and B Gamma - G1 w must lie in range(G2).
        struct CoupledQp
        {
            DenseQp qp;
            CMatrix G2_pinv;
            CVector a; // G1 w
        };

        inline CoupledQp coupled_qp(const MinEigProblem &prob, const AlignmentGeometry &ag)
        {
            const CiCoupling &ci = *prob.ci;
            const Index n = prob.dimension();
            const Index nt = ci.G.cols();
            const CMatrix G1 = ci.G.leftCols(n);
            const CMatrix G2 = ci.G.rightCols(nt - n);
            CoupledQp out;
            out.a = G1 * ag.w;
            const RMatrix B = realified_basis(prob.s);
            const RVector ar = stack_real(out.a);

            CMatrix M = CMatrix::Zero(n, n);
            CMatrix Uperp = CMatrix::Identity(n, n);
            out.G2_pinv = CMatrix::Zero(nt - n, n);
            if (nt > n)
            {
                const SvdResult sv = svd(G2);
                const Index r = sv.rank(1e-10);
                const CMatrix Ur = sv.U.leftCols(r);
                const RVector sr = sv.sigma.head(r);
                M = Ur * sr.cwiseAbs2().cwiseInverse().asDiagonal() * Ur.adjoint();
                Uperp = sv.U.rightCols(n - r);
                out.G2_pinv = pinv(G2, 1e-10);
            }
            const RMatrix Mr = realify(M);
            const Index dim = 2 * n;
            out.qp.H = 2.0 * B.transpose() * Mr * B;
            out.qp.H = (0.5 * (out.qp.H + out.qp.H.transpose())).eval();
            out.qp.f = -2.0 * B.transpose() * Mr * ar;

            std::vector<RVector> eq_rows, in_rows;
            std::vector<double> eq_rhs;
            if (Uperp.cols() > 0)
            {
                const RMatrix Pr = realify_rect(CMatrix(Uperp.adjoint()));
                const RMatrix rows = Pr * B;
                const RVector rhs = Pr * ar;
                for (Index i = 0; i < rows.rows(); ++i)
                {
                    eq_rows.push_back(rows.row(i).transpose());
                    eq_rhs.push_back(rhs(i));
                }
            }
            append_ci_rows(ci.partition, dim, eq_rows, in_rows);
            eq_rhs.resize(eq_rows.size(), 0.0);

            out.qp.A_eq = stack_rows(eq_rows, dim);
            out.qp.b_eq = Eigen::Map<const RVector>(eq_rhs.data(), static_cast<Index>(eq_rhs.size()));
            out.qp.A_in = stack_rows(in_rows, dim);
            out.qp.b_in = RVector::Zero(static_cast<Index>(in_rows.size()));
            return out;
        }

        // Least-squares KKT multipliers for a DenseQp at x; reports normalized residuals.
        inline KktReport dense_qp_kkt(const DenseQp &qp, const RVector &x)
        {
            KktReport r;
            const RVector g = qp.H * x + qp.f;
            const double gscale = 1.0 + g.lpNorm<Eigen::Infinity>() + qp.f.lpNorm<Eigen::Infinity>();
            std::vector<Index> act;
            const RVector slack = qp.A_in.rows() ? RVector(qp.A_in * x - qp.b_in) : RVector();
            for (Index i = 0; i < slack.size(); ++i)
            {
                r.primal = std::max(r.primal, -slack(i));
                if (slack(i) <= 1e-9 * (1.0 + std::abs(qp.b_in(i))))
                    act.push_back(i);
            }
            if (qp.A_eq.rows())
                r.primal = std::max(r.primal, (qp.A_eq * x - qp.b_eq).lpNorm<Eigen::Infinity>());
            const Index me = qp.A_eq.rows();
            RMatrix A(x.size(), me + static_cast<Index>(act.size()));
            if (me)
                A.leftCols(me) = qp.A_eq.transpose();
            for (std::size_t j = 0; j < act.size(); ++j)
                A.col(me + static_cast<Index>(j)) = qp.A_in.row(act[j]).transpose();
            RVector mult = RVector::Zero(A.cols());
            if (A.cols())
                mult = pinv(A, 1e-12) * g;
            r.stationarity = (g - A * mult).lpNorm<Eigen::Infinity>() / gscale;
            for (std::size_t j = 0; j < act.size(); ++j)
            {
                const double mu = mult(me + static_cast<Index>(j));
                r.dual = std::max(r.dual, -mu / gscale);
                r.complementarity = std::max(r.complementarity, std::abs(mu * slack(act[j])));
            }
            return r;
        }
    } // namespace detail

    // Maximize the minimum eigenvalue of P1 on the alignment complement subject to the power budget,
    // optionally with the CI coupling through the remaining N_T - KL antennas.
    inline MinEigSolution solve_min_eig(const MinEigProblem &prob)
    {
        const Index n = prob.dimension();
        if (prob.K < 1 || prob.L < 1 || prob.s.size() != n)
            throw ContractError("solve_min_eig: inconsistent dimensions");
        if (!(prob.p >= 0.0))
            throw ConfigError("solve_min_eig: power budget must be nonnegative");
        if (!prob.s.allFinite())
            throw NumericError("solve_min_eig: non-finite symbols");

        const AlignmentGeometry ag = alignment_geometry(prob.s, prob.K, prob.L);
        const double wnorm2 = ag.w.squaredNorm();
        if (!(wnorm2 > 0.0))
            throw NumericError("solve_min_eig: symbol vector lies in the alignment null space");

        MinEigSolution sol;
        if (!prob.ci)
        {
            sol.z = std::sqrt(prob.p / wnorm2);
            sol.P1 = sol.z * ag.projector;
            return sol;
        }

        const CiCoupling &ci = *prob.ci;
        if (ci.G.rows() != n || ci.G.cols() < n || ci.partition.dimension() != 2 * n)
            throw ContractError("solve_min_eig: CI coupling dimensions do not match the problem");

        const detail::CoupledQp cq = detail::coupled_qp(prob, ag);
        const DenseQpResult res = solve_dense_qp(cq.qp);
        const RVector &gamma1 = res.x;
        const CVector Bg = [&] {
            CVector v(n);
            for (Index i = 0; i < n; ++i)
                v(i) = cplx(gamma1(2 * i) * prob.s(i).real(), gamma1(2 * i + 1) * prob.s(i).imag());
            return v;
        }();
        const CVector x2 = cq.G2_pinv * (Bg - cq.a);
        const double m = x2.squaredNorm();

        sol.z = std::sqrt(prob.p / (wnorm2 + m));
        sol.P1 = sol.z * ag.projector;
        sol.gamma = sol.z * gamma1;
        sol.t = std::max(0.0, detail::ci_margin(sol.gamma, ci.partition));
        sol.iterations = res.iterations;

        const Index extra = ci.G.cols() - n;
        sol.P2 = CMatrix::Zero(extra, n);
        if (extra > 0)
            for (Index k = 0; k < prob.K; ++k)
            {
                const CVector sk = prob.s.segment(k * prob.L, prob.L);
                sol.P2.middleCols(k * prob.L, prob.L) =
                    (sol.z * x2 / static_cast<double>(prob.K)) * (sk.adjoint() / sk.squaredNorm());
            }
        return sol;
    }

    inline KktReport kkt_residuals(const MinEigProblem &prob, const MinEigSolution &sol)
    {
        const Index n = prob.dimension();
        if (sol.P1.rows() != n || sol.P1.cols() != n)
            throw ContractError("kkt_residuals: P1 shape does not match the problem");
        const AlignmentGeometry ag = alignment_geometry(prob.s, prob.K, prob.L);
        KktReport r;

        // Primal: LMI on the complement, power, alignment, Hermitian structure.
        const CMatrix X = ag.perp_basis.adjoint() * sol.P1 * ag.perp_basis;
        const CMatrix Xh = 0.5 * (X + X.adjoint());
        const double lmin = X.rows() ? eig_hermitian(Xh).values(0) : sol.z;
        r.primal = std::max(0.0, sol.z - lmin);
        r.primal = std::max(r.primal, (sol.P1 - sol.P1.adjoint()).norm());
        r.primal = std::max(r.primal, (sol.P1 * ag.null_basis).norm());

        CVector x = sol.P1 * prob.s;
        const bool coupled = prob.ci.has_value();
        if (coupled && sol.P2.rows() > 0)
        {
            if (sol.P2.cols() != n)
                throw ContractError("kkt_residuals: P2 shape does not match the problem");
            CVector full(n + sol.P2.rows());
            full << x, sol.P2 * prob.s;
            x = full;
            for (Index k = 0; k < prob.K; ++k)
                r.primal = std::max(r.primal, (sol.P2 * prob.s - static_cast<double>(prob.K) * sol.P2 * embed_user_block(prob.s, k, prob.L)).norm());
        }
        r.primal = std::max(r.primal, x.squaredNorm() - prob.p);
        r.complementarity = std::abs(x.squaredNorm() - prob.p) / std::max(1.0, prob.p);

        if (!coupled)
        {
            // Dual certificate Z = w w^H / |w|^2 bounds z by sqrt(p)/|w|.
            const double wn = ag.w.norm();
            const double z_upper = std::sqrt(prob.p) / wn;
            r.stationarity = std::abs(z_upper - sol.z) / std::max(1.0, z_upper);
            const double wxw = (ag.w.adjoint() * sol.P1 * ag.w)(0).real() / (wn * wn);
            r.complementarity = std::max(r.complementarity, std::abs(wxw - sol.z));
            return r;
        }

        const CiCoupling &ci = *prob.ci;
        if (sol.gamma.size() != 2 * n)
            throw ContractError("kkt_residuals: gamma length does not match the problem");
        const CVector Gx = ci.G * x;
        for (Index i = 0; i < n; ++i)
        {
            const cplx target(sol.gamma(2 * i) * prob.s(i).real(), sol.gamma(2 * i + 1) * prob.s(i).imag());
            r.primal = std::max(r.primal, std::abs(Gx(i) - target));
        }
        for (Index o : ci.partition.outer_indices)
            r.primal = std::max(r.primal, sol.t - sol.gamma(o));
        for (Index i : ci.partition.inner_indices)
            r.primal = std::max(r.primal, std::abs(sol.gamma(i) - sol.t));
        r.primal = std::max(r.primal, -sol.t);

        if (sol.z > 0.0)
        {
            const detail::CoupledQp cq = detail::coupled_qp(prob, ag);
            const KktReport q = detail::dense_qp_kkt(cq.qp, sol.gamma / sol.z);
            r.stationarity = q.stationarity;
            r.dual = q.dual;
            r.complementarity = std::max(r.complementarity, q.complementarity);
            r.primal = std::max(r.primal, q.primal);
        }
        return r;
    }

} // namespace slp

#endif
