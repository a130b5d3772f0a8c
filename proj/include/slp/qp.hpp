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

#ifndef SLP_QP_HPP
#define SLP_QP_HPP

#include "slp/common.hpp"
#include "slp/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace slp
{
    // Strictly convex dense QP on the feasible affine subspace:
    //   minimize 1/2 x'Hx + f'x  subject to  A_eq x = b_eq,  A_in x >= b_in.
    struct DenseQp
    {
        RMatrix H;
        RVector f;
        RMatrix A_eq;
        RVector b_eq;
        RMatrix A_in;
        RVector b_in;
    };

    struct DenseQpResult
    {
        RVector x;
        RVector mu_in;             // multipliers of the inequality rows, zero when inactive
        std::vector<Index> active; // active inequality rows
        double objective = 0.0;
        int iterations = 0;
    };

    namespace detail
    {
        struct Givens
        {
            double c = 1.0, s = 0.0, h = 0.0;
            static Givens zeroing(double a, double b)
            {
                Givens g;
                g.h = std::hypot(a, b);
                if (g.h > 0.0)
                {
                    g.c = a / g.h;
                    g.s = b / g.h;
                }
                return g;
            }
        };

        inline void rotate_columns(RMatrix &J, Index j, const Givens &g)
        {
            for (Index r = 0; r < J.rows(); ++r)
            {
                const double a = J(r, j), b = J(r, j + 1);
                J(r, j) = g.c * a + g.s * b;
                J(r, j + 1) = -g.s * a + g.c * b;
            }
        }

        // Goldfarb-Idnani dual active-set method for min 1/2 y'Hy + f'y s.t. C y >= d, H positive definite.
        inline DenseQpResult goldfarb_idnani(const RMatrix &H, const RVector &f, const RMatrix &C, const RVector &d, int max_iter)
        {
            const Index n = H.rows();
            const Index m = C.rows();
            DenseQpResult res;

            Eigen::LLT<RMatrix> llt(H);
            if (llt.info() != Eigen::Success)
                throw NumericError("dense QP: Hessian is not positive definite on the feasible subspace");
            RMatrix J = llt.matrixU().solve(RMatrix::Identity(n, n)); // L^{-T}
            RVector x = -llt.solve(f);
            RMatrix R = RMatrix::Zero(n, n);
            std::vector<Index> active;
            std::vector<double> u;
            std::vector<char> in_active(static_cast<std::size_t>(m), 0);

            auto slack = [&](Index i) { return C.row(i).dot(x) - d(i); };
            auto tol_of = [&](Index i) { return 1e-11 * (1.0 + std::abs(d(i)) + C.row(i).lpNorm<1>() * x.lpNorm<Eigen::Infinity>()); };

            auto drop = [&](std::size_t k) {
                const Index q = static_cast<Index>(active.size());
                in_active[static_cast<std::size_t>(active[k])] = 0;
                active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
                u.erase(u.begin() + static_cast<std::ptrdiff_t>(k));
                for (Index col = static_cast<Index>(k); col + 1 < q; ++col)
                    R.col(col) = R.col(col + 1);
                R.col(q - 1).setZero();
                for (Index j = static_cast<Index>(k); j + 1 < q; ++j)
                {
                    const Givens g = Givens::zeroing(R(j, j), R(j + 1, j));
                    for (Index col = j; col + 1 < q; ++col)
                    {
                        const double a = R(j, col), b = R(j + 1, col);
                        R(j, col) = g.c * a + g.s * b;
                        R(j + 1, col) = -g.s * a + g.c * b;
                    }
                    R(j + 1, j) = 0.0;
                    rotate_columns(J, j, g);
                }
            };

            int iter = 0;
            for (;;)
            {
                Index p = -1;
                double worst = 0.0;
                for (Index i = 0; i < m; ++i)
                {
                    if (in_active[static_cast<std::size_t>(i)])
                        continue;
                    const double s = slack(i);
                    if (s < -tol_of(i) && (p < 0 || s < worst))
                    {
                        worst = s;
                        p = i;
                    }
                }
                if (p < 0)
                    break;

                RVector np = C.row(p).transpose();
                double u_new = 0.0;
                for (;;)
                {
                    if (++iter > max_iter)
                        throw NumericError("dense QP: iteration limit reached");
                    const Index q = static_cast<Index>(active.size());
                    RVector dv = J.transpose() * np;
                    RVector z = J.rightCols(n - q) * dv.tail(n - q);
                    RVector r(q);
                    if (q > 0)
                        r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(dv.head(q));

                    double t1 = std::numeric_limits<double>::infinity();
                    Index k = -1;
                    for (Index j = 0; j < q; ++j)
                        if (r(j) > 1e-14 * (1.0 + r.lpNorm<Eigen::Infinity>()))
                        {
                            const double ratio = u[static_cast<std::size_t>(j)] / r(j);
                            if (ratio < t1)
                            {
                                t1 = ratio;
                                k = j;
                            }
                        }
                    const double zn = z.dot(np);
                    const double t2 = (z.norm() > 1e-13 * (1.0 + np.norm()) && zn > 0.0) ? -slack(p) / zn : std::numeric_limits<double>::infinity();
                    const double t = std::min(t1, t2);

                    if (!std::isfinite(t))
                        throw InfeasibleError("dense QP: constraints are inconsistent", p);

                    if (!std::isfinite(t2))
                    {
                        for (Index j = 0; j < q; ++j)
                            u[static_cast<std::size_t>(j)] -= t * r(j);
                        u_new += t;
                        drop(static_cast<std::size_t>(k));
                        continue;
                    }

                    x += t * z;
                    for (Index j = 0; j < q; ++j)
                        u[static_cast<std::size_t>(j)] -= t * r(j);
                    u_new += t;

                    if (t == t2)
                    {
                        for (Index j = n - 1; j > q; --j)
                        {
                            const Givens g = Givens::zeroing(dv(j - 1), dv(j));
                            dv(j - 1) = g.h;
                            dv(j) = 0.0;
                            rotate_columns(J, j - 1, g);
                        }
                        R.col(q).head(q + 1) = dv.head(q + 1);
                        active.push_back(p);
                        u.push_back(u_new);
                        in_active[static_cast<std::size_t>(p)] = 1;
                        break;
                    }
                    drop(static_cast<std::size_t>(k));
                }
            }

            res.x = x;
            res.mu_in = RVector::Zero(m);
            for (std::size_t j = 0; j < active.size(); ++j)
                res.mu_in(active[j]) = u[j];
            res.active = active;
            res.objective = 0.5 * x.dot(H * x) + f.dot(x);
            res.iterations = iter;
            return res;
        }
    } // namespace detail

    // Equalities are eliminated through an SVD null-space parameterization, then the
    // reduced strictly convex problem is solved by the Goldfarb-Idnani dual method.
    inline DenseQpResult solve_dense_qp(const DenseQp &qp, int max_iter = 1000)
    {
        const Index n = qp.H.rows();
        if (qp.H.cols() != n || qp.f.size() != n || qp.A_eq.cols() != (qp.A_eq.rows() ? n : qp.A_eq.cols()) ||
            qp.A_in.cols() != (qp.A_in.rows() ? n : qp.A_in.cols()) || qp.b_eq.size() != qp.A_eq.rows() || qp.b_in.size() != qp.A_in.rows())
            throw ContractError("dense QP: inconsistent dimensions");

        RVector x0 = RVector::Zero(n);
        RMatrix Z = RMatrix::Identity(n, n);
        if (qp.A_eq.rows() > 0)
        {
            Eigen::JacobiSVD<RMatrix> s(qp.A_eq, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const RVector &sig = s.singularValues();
            const double tol = 1e-10;
            Index r = 0;
            while (r < sig.size() && sig(0) > 0.0 && sig(r) > tol * sig(0))
                ++r;
            x0 = s.matrixV().leftCols(r) * (sig.head(r).cwiseInverse().asDiagonal() * (s.matrixU().leftCols(r).transpose() * qp.b_eq));
            const RVector resid = qp.A_eq * x0 - qp.b_eq;
            Index worst = 0;
            const double rmax = resid.cwiseAbs().maxCoeff(&worst);
            if (rmax > 1e-9 * (1.0 + qp.b_eq.lpNorm<Eigen::Infinity>()))
                throw InfeasibleError("dense QP: equality constraints are inconsistent", worst);
            Z = s.matrixV().rightCols(n - r);
        }

        const RVector slack0 = qp.A_in.rows() ? RVector(qp.A_in * x0 - qp.b_in) : RVector();
        DenseQpResult res;
        if (Z.cols() == 0)
        {
            for (Index i = 0; i < slack0.size(); ++i)
                if (slack0(i) < -1e-9 * (1.0 + std::abs(qp.b_in(i))))
                    throw InfeasibleError("dense QP: inequality violated at the unique equality solution", i);
            res.x = x0;
            res.mu_in = RVector::Zero(qp.A_in.rows());
            res.objective = 0.5 * x0.dot(qp.H * x0) + qp.f.dot(x0);
            return res;
        }

        RMatrix Hr = Z.transpose() * qp.H * Z;
        Hr = (0.5 * (Hr + Hr.transpose())).eval();
        const RVector fr = Z.transpose() * (qp.H * x0 + qp.f);
        const RMatrix Cr = qp.A_in.rows() ? RMatrix(qp.A_in * Z) : RMatrix(0, Z.cols());
        const RVector dr = qp.A_in.rows() ? RVector(-slack0) : RVector();

        DenseQpResult red = detail::goldfarb_idnani(Hr, fr, Cr, dr, max_iter);
        res.x = x0 + Z * red.x;
        res.mu_in = red.mu_in;
        res.active = red.active;
        res.iterations = red.iterations;
        res.objective = 0.5 * res.x.dot(qp.H * res.x) + qp.f.dot(res.x);
        return res;
    }

} // namespace slp

#endif
