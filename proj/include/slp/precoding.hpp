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

#ifndef SLP_PRECODING_HPP
#define SLP_PRECODING_HPP

#include "slp/channel.hpp"
#include "slp/common.hpp"
#include "slp/constellation.hpp"
#include "slp/linalg.hpp"
#include "slp/qp.hpp"
#include "slp/solvers.hpp"

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

namespace slp
{
    struct CombinerSet
    {
        std::vector<CMatrix> per_user; // K matrices L x N_R

        CMatrix block_diagonal() const
        {
            Index rows = 0, cols = 0;
            for (const auto &W : per_user)
            {
                rows += W.rows();
                cols += W.cols();
            }
            CMatrix out = CMatrix::Zero(rows, cols);
            Index r = 0, c = 0;
            for (const auto &W : per_user)
            {
                out.block(r, c, W.rows(), W.cols()) = W;
                r += W.rows();
                c += W.cols();
            }
            return out;
        }

        // W_k = [I_L | 0]: the first L receive antennas of every user.
        static CombinerSet selector(Index K, Index L, Index N_R)
        {
            CombinerSet w;
            w.per_user.assign(static_cast<std::size_t>(K), CMatrix::Identity(L, N_R));
            return w;
        }
    };

    struct PrecodeOutcome
    {
        CMatrix P;      // N_T x KL
        RVector gamma;  // 2KL scaling of the real/imaginary components, empty for schemes without CI
        double t = 0.0; // CI margin
        int iterations = 0;
        RVector sigma;  // singular values of P
        double z = 0.0; // minimum eigenvalue of the top block on the alignment complement (SSVMP, SDP)
    };

    struct CiGeometry
    {
        CMatrix G;      // KL x N_T
        CVector s;      // KL
        CVector s_bar;  // 2KL, [Re s_i, j Im s_i] interleaved
        CRowVector s_hat; // [1/s_1 ... 1/s_KL]
        RMatrix U;      // I_KL kron [1 1]
        CMatrix gram_pinv; // (G G^H)^+
        CMatrix T;
        RMatrix V;
        RMatrix V_tilde;
        IndexPartition partition;
        Index rank = 0;

        const RMatrix &E() const { return partition.permutation; }
        bool full_row_rank() const { return rank == G.rows(); }
        CMatrix g_rows() const { return G; }
    };

    namespace detail
    {
        inline void check_symbols(const CVector &s)
        {
            for (Index i = 0; i < s.size(); ++i)
                if (s(i) == cplx(0.0, 0.0))
                    throw InvalidSymbolError("zero symbol has no reciprocal");
        }

        inline CVector signal_of(const RVector &gamma, const CVector &s)
        {
            CVector v(s.size());
            for (Index i = 0; i < s.size(); ++i)
                v(i) = cplx(gamma(2 * i) * s(i).real(), gamma(2 * i + 1) * s(i).imag());
            return v;
        }

        inline RMatrix pair_sum(Index n)
        {
            RMatrix U = RMatrix::Zero(n, 2 * n);
            for (Index i = 0; i < n; ++i)
            {
                U(i, 2 * i) = 1.0;
                U(i, 2 * i + 1) = 1.0;
            }
            return U;
        }

        inline CVector basis_vector(const CVector &s)
        {
            CVector sb(2 * s.size());
            for (Index i = 0; i < s.size(); ++i)
            {
                const SymbolBases b = decompose_symbol(s(i));
                sb(2 * i) = b.s_R;
                sb(2 * i + 1) = b.s_J;
            }
            return sb;
        }

        inline RMatrix regularized_inverse(const RMatrix &Vt)
        {
            const Index n = Vt.rows();
            const double eps = 1e-10 * Vt.trace() / static_cast<double>(n);
            RMatrix A = Vt + eps * RMatrix::Identity(n, n);
            A = (0.5 * (A + A.transpose())).eval();
            Eigen::LDLT<RMatrix> ldlt(A);
            if (ldlt.info() != Eigen::Success)
                throw NumericError("CI geometry: regularized matrix is not invertible");
            RMatrix Q = ldlt.solve(RMatrix::Identity(n, n));
            return 0.5 * (Q + Q.transpose());
        }

        inline CMatrix rank_one_precoder(const CVector &x, const CVector &s)
        {
            CRowVector sh(s.size());
            for (Index i = 0; i < s.size(); ++i)
                sh(i) = 1.0 / s(i);
            return x * sh / static_cast<double>(s.size());
        }

        inline RVector singular_values(const CMatrix &P)
        {
            if (P.size() == 0)
                return RVector();
            Eigen::JacobiSVD<CMatrix> sv(P);
            return sv.singularValues();
        }
    } // namespace detail

    inline CiGeometry build_ci_geometry(const CMatrix &G, const CVector &s, const Constellation &c)
    {
        if (G.rows() != s.size())
            throw ContractError("CI geometry: G rows must equal the number of symbols");
        if (!G.allFinite())
            throw NumericError("CI geometry: non-finite G");
        detail::check_symbols(s);

        CiGeometry g;
        g.G = G;
        g.s = s;
        g.partition = build_index_partition(s, c);
        const Index n = s.size();
        g.s_bar = detail::basis_vector(s);
        g.s_hat.resize(n);
        for (Index i = 0; i < n; ++i)
            g.s_hat(i) = 1.0 / s(i);
        g.U = detail::pair_sum(n);

        const SvdResult sv = svd(G);
        g.rank = sv.rank(1e-10);
        const CMatrix Ur = sv.U.leftCols(g.rank);
        g.gram_pinv = Ur * sv.sigma.head(g.rank).cwiseAbs2().cwiseInverse().asDiagonal() * Ur.adjoint();

        // T = diag(s_bar^H) U^H (GG^H)^+ U diag(s_bar) = B^H (GG^H)^+ B with B = U diag(s_bar).
        const CMatrix B = g.U.cast<cplx>() * g.s_bar.asDiagonal();
        g.T = B.adjoint() * g.gram_pinv * B;
        g.V = g.T.real();
        g.V = (0.5 * (g.V + g.V.transpose())).eval();
        g.V_tilde = g.E() * g.V * g.E().transpose();
        return g;
    }

    inline CMatrix effective_ci_matrix(const CombinerSet &W, const ChannelSet &H)
    {
        if (static_cast<Index>(W.per_user.size()) != H.users())
            throw ContractError("CI geometry: combiner and channel user counts differ");
        CMatrix G(0, H.tx_antennas());
        for (std::size_t k = 0; k < W.per_user.size(); ++k)
        {
            if (W.per_user[k].cols() != H.per_user[k].rows())
                throw ContractError("CI geometry: combiner width does not match the receive antennas");
            CMatrix next(G.rows() + W.per_user[k].rows(), G.cols());
            next << G, W.per_user[k] * H.per_user[k];
            G = std::move(next);
        }
        return G;
    }

    inline CiGeometry build_ci_geometry(const CombinerSet &W, const ChannelSet &H, const CVector &s, const Constellation &c)
    {
        return build_ci_geometry(effective_ci_matrix(W, H), s, c);
    }

    namespace detail
    {
        // Unit-margin power problem on range(G) when G G^H is singular: minimize xi' V xi subject to
        // B xi in range(G), xi_I = 1, xi_O >= 1.
        inline RVector reduced_ci_solution(const CiGeometry &g)
        {
            const Index n = g.s.size();
            const Index dim = 2 * n;
            const RMatrix Br = realified_basis(g.s);
            const SvdResult sv = svd(g.G);
            const CMatrix Uperp = sv.U.rightCols(n - g.rank);

            DenseQp qp;
            qp.H = 2.0 * g.V;
            qp.f = RVector::Zero(dim);
            std::vector<RVector> eq_rows, in_rows;
            std::vector<double> eq_rhs;
            if (Uperp.cols() > 0)
            {
                const RMatrix rows = realify_rect(CMatrix(Uperp.adjoint())) * Br;
                for (Index i = 0; i < rows.rows(); ++i)
                {
                    eq_rows.push_back(rows.row(i).transpose());
                    eq_rhs.push_back(0.0);
                }
            }
            for (Index i : g.partition.inner_indices)
            {
                RVector row = RVector::Zero(dim);
                row(i) = 1.0;
                eq_rows.push_back(row);
                eq_rhs.push_back(1.0);
            }
            std::vector<double> in_rhs;
            for (Index o : g.partition.outer_indices)
            {
                RVector row = RVector::Zero(dim);
                row(o) = 1.0;
                in_rows.push_back(row);
                in_rhs.push_back(1.0);
            }
            qp.A_eq = stack_rows(eq_rows, dim);
            qp.b_eq = Eigen::Map<const RVector>(eq_rhs.data(), static_cast<Index>(eq_rhs.size()));
            qp.A_in = stack_rows(in_rows, dim);
            qp.b_in = Eigen::Map<const RVector>(in_rhs.data(), static_cast<Index>(in_rhs.size()));
            return solve_dense_qp(qp).x;
        }
    } // namespace detail

    inline PrecodeOutcome slp_closed_form(const CiGeometry &g, double p)
    {
        if (!(p >= 0.0))
            throw ConfigError("slp_closed_form: power budget must be nonnegative");
        const Index n = g.s.size();
        const RMatrix &E = g.E();

        RVector gamma;
        int iterations = 1;
        if (g.full_row_rank())
        {
            const RMatrix Q = detail::regularized_inverse(g.V_tilde);
            const DualVector u = solve_simplex_qp({Q, g.partition.outer_count()});
            const RVector Qu = Q * u.u;
            const double q = u.u.dot(Qu);
            if (!(q > 0.0))
                throw NumericError("slp_closed_form: degenerate dual objective");
            gamma = std::sqrt(p / q) * (E.transpose() * Qu);
        }
        else
        {
            const RVector xi = detail::reduced_ci_solution(g);
            const double q = xi.dot(g.V * xi);
            if (!(q > 0.0))
                throw NumericError("slp_closed_form: degenerate reduced objective");
            gamma = std::sqrt(p / q) * xi;
            iterations = 2;
        }

        const CVector x = g.G.adjoint() * (g.gram_pinv * detail::signal_of(gamma, g.s));
        PrecodeOutcome out;
        out.P = x * g.s_hat / static_cast<double>(n);
        out.gamma = gamma;
        out.t = detail::ci_margin(gamma, g.partition);
        out.iterations = iterations;
        out.sigma = detail::singular_values(out.P);
        return out;
    }

    struct CombinerOutcome
    {
        CMatrix W;     // L x N_R
        RVector gamma; // 2L
        double t = 0.0;
    };

    inline CombinerOutcome optimal_combiner(const CMatrix &H_k, const CMatrix &P, const CVector &s, Index k, Index L, const Constellation &c)
    {
        if (H_k.cols() != P.rows() || P.cols() != s.size() || (k + 1) * L > s.size())
            throw ContractError("optimal_combiner: inconsistent dimensions");
        const CVector r = H_k * (P * s);
        const double rr = r.squaredNorm();
        if (!(rr > 0.0) || !std::isfinite(rr))
            throw DegenerateChannelError("optimal_combiner: received signal is zero");

        const CVector sk = s.segment(k * L, L);
        detail::check_symbols(sk);
        const IndexPartition part = build_index_partition(sk, c);
        const CVector sb = detail::basis_vector(sk);
        const RMatrix U1 = detail::pair_sum(L);
        const CMatrix B1 = U1.cast<cplx>() * sb.asDiagonal();
        RMatrix V1 = (B1.adjoint() * B1).real();
        V1 = (0.5 * (V1 + V1.transpose())).eval();
        const RMatrix &E = part.permutation;
        const RMatrix Q = detail::regularized_inverse(E * V1 * E.transpose());
        const DualVector u = solve_simplex_qp({Q, part.outer_count()});
        const RVector Qu = Q * u.u;
        const double q = u.u.dot(Qu);
        if (!(q > 0.0))
            throw NumericError("optimal_combiner: degenerate dual objective");

        CombinerOutcome out;
        out.gamma = std::sqrt(rr / q) * (E.transpose() * Qu);
        out.W = (detail::signal_of(out.gamma, sk) * r.adjoint()) / rr;
        out.t = detail::ci_margin(out.gamma, part);
        return out;
    }

    struct JointDesignOutcome
    {
        PrecodeOutcome precode;
        CombinerSet combiners;
        std::vector<double> t_trace; // t after each iteration
    };

    namespace detail
    {
        // Transmit beam that balances the per-user CI margins ||H_k x|| / ||s_k||: the top
        // eigenvector of sum_k w_k A_k with the weights driven by multiplicative updates.
        inline CVector balanced_beam(const ChannelSet &H, const CVector &s, Index L, double p, int steps = 60)
        {
            const Index K = H.users();
            const Index nt = H.tx_antennas();
            std::vector<CMatrix> A(static_cast<std::size_t>(K));
            for (Index k = 0; k < K; ++k)
            {
                const double c2 = s.segment(k * L, L).squaredNorm();
                A[static_cast<std::size_t>(k)] = H.per_user[static_cast<std::size_t>(k)].adjoint() * H.per_user[static_cast<std::size_t>(k)] / c2;
            }
            RVector w = RVector::Constant(K, 1.0 / static_cast<double>(K));
            CVector best = CVector::Zero(nt);
            double best_gain = -1.0;
            RVector g(K);
            for (int it = 0; it <= steps; ++it)
            {
                CMatrix S = CMatrix::Zero(nt, nt);
                for (Index k = 0; k < K; ++k)
                    S += w(k) * A[static_cast<std::size_t>(k)];
                const CVector v = eig_hermitian(0.5 * (S + S.adjoint())).vectors.col(nt - 1);
                for (Index k = 0; k < K; ++k)
                    g(k) = (v.adjoint() * A[static_cast<std::size_t>(k)] * v)(0).real();
                if (g.minCoeff() > best_gain)
                {
                    best_gain = g.minCoeff();
                    best = v;
                }
                const double mean = g.mean();
                if (!(mean > 0.0))
                    break;
                for (Index k = 0; k < K; ++k)
                    w(k) *= std::exp(-0.5 * g(k) / mean);
                w /= w.sum();
            }
            return std::sqrt(p) * best;
        }
    } // namespace detail

    inline JointDesignOutcome joint_design_ao(const ChannelSet &H, const CVector &s, const Constellation &c, double p, double kappa = 1e-5, int max_iterations = 200)
    {
        const Index K = H.users();
        if (K < 1 || s.size() % K != 0)
            throw ContractError("joint_design_ao: symbol count is not a multiple of the user count");
        const Index L = s.size() / K;
        if (!(kappa > 0.0))
            throw ConfigError("joint_design_ao: kappa must be positive");
        if (H.tx_antennas() < K * L || L > H.rx_antennas())
            throw ConfigError("joint_design_ao: need N_T >= K*L and L <= N_R");
        if (!(p > 0.0))
            throw ConfigError("joint_design_ao: power budget must be positive");

        CMatrix P = detail::rank_one_precoder(detail::balanced_beam(H, s, L, p), s);
        JointDesignOutcome out;
        double t_prev = 0.0;
        for (int it = 0; it < max_iterations; ++it)
        {
            CombinerSet W;
            for (Index k = 0; k < K; ++k)
                W.per_user.push_back(optimal_combiner(H.per_user[static_cast<std::size_t>(k)], P, s, k, L, c).W);
            const CiGeometry g = build_ci_geometry(W, H, s, c);
            PrecodeOutcome step = slp_closed_form(g, p);
            // The common-margin P-step can land below the previous margin when
            // the per-user combiner margins differ; keep the previous iterate.
            if (it > 0 && step.t < t_prev)
            {
                out.t_trace.push_back(t_prev);
                out.precode.iterations = it + 1;
                return out;
            }
            out.t_trace.push_back(step.t);
            P = step.P;
            out.precode = std::move(step);
            out.combiners = std::move(W);
            if (std::abs(out.precode.t - t_prev) <= kappa)
            {
                out.precode.iterations = it + 1;
                return out;
            }
            t_prev = out.precode.t;
        }
        throw ConvergenceError("joint_design_ao: no convergence within " + std::to_string(max_iterations) + " iterations", out.t_trace);
    }

    inline PrecodeOutcome sdp_precoder(const CVector &s, const Constellation &c, double p, Index K, Index L, Index N_T)
    {
        if (N_T < K * L)
            throw ConfigError("sdp_precoder: need N_T >= K*L");
        build_index_partition(s, c);
        const MinEigSolution sol = solve_min_eig({s, K, L, p, std::nullopt});
        PrecodeOutcome out;
        out.P = CMatrix::Zero(N_T, K * L);
        out.P.topRows(K * L) = sol.P1;
        out.z = sol.z;
        out.iterations = sol.iterations;
        out.sigma = detail::singular_values(out.P);
        return out;
    }

    struct SelectorSource
    {
    };
    using CiSource = std::variant<SelectorSource, CombinerSet>;

    inline PrecodeOutcome ssvmp_precoder(const ChannelSet &H, const CVector &s, const Constellation &c, double p, const CiSource &source = SelectorSource{})
    {
        const Index K = H.users();
        if (K < 1 || s.size() % K != 0)
            throw ContractError("ssvmp_precoder: symbol count is not a multiple of the user count");
        const Index L = s.size() / K;
        const Index nt = H.tx_antennas();
        if (nt < K * L)
            throw ConfigError("ssvmp_precoder: need N_T >= K*L");
        if (L > H.rx_antennas())
            throw ConfigError("ssvmp_precoder: need L <= N_R");

        const CombinerSet W = std::holds_alternative<CombinerSet>(source) ? std::get<CombinerSet>(source)
                                                                          : CombinerSet::selector(K, L, H.rx_antennas());
        MinEigProblem prob{s, K, L, p, CiCoupling{effective_ci_matrix(W, H), build_index_partition(s, c)}};
        const MinEigSolution sol = solve_min_eig(prob);

        PrecodeOutcome out;
        out.P = CMatrix(nt, K * L);
        out.P.topRows(K * L) = sol.P1;
        if (nt > K * L)
            out.P.bottomRows(nt - K * L) = sol.P2;
        out.gamma = sol.gamma;
        out.t = sol.t;
        out.z = sol.z;
        out.iterations = sol.iterations;
        out.sigma = detail::singular_values(out.P);
        return out;
    }

    // Block diagonalization with equal power per stream; columns of P are unit norm before
    // the common scaling so that ||P||_F^2 = p.
    inline PrecodeOutcome bd_precoder(const ChannelSet &H, Index L, double p)
    {
        const Index K = H.users();
        const Index nt = H.tx_antennas();
        const Index nr = H.rx_antennas();
        if (K < 1 || L < 1 || L > nr)
            throw ConfigError("bd_precoder: need 1 <= L <= N_R");
        if (!(p >= 0.0))
            throw ConfigError("bd_precoder: power budget must be nonnegative");
        PrecodeOutcome out;
        out.P = CMatrix::Zero(nt, K * L);
        const double scale = std::sqrt(p / static_cast<double>(K * L));
        for (Index k = 0; k < K; ++k)
        {
            CMatrix others(nr * (K - 1), nt);
            Index row = 0;
            for (Index i = 0; i < K; ++i)
                if (i != k)
                {
                    others.middleRows(row, nr) = H.per_user[static_cast<std::size_t>(i)];
                    row += nr;
                }
            const CMatrix N = K > 1 ? null_space_basis(others, 1e-10) : CMatrix::Identity(nt, nt);
            if (N.cols() < L)
                throw ConfigError("bd_precoder: null space of the other users has dimension " + std::to_string(N.cols()) +
                                  " < L = " + std::to_string(L));
            const SvdResult sv = svd(H.per_user[static_cast<std::size_t>(k)] * N);
            out.P.middleCols(k * L, L) = scale * (N * sv.V.leftCols(L));
        }
        out.iterations = 1;
        out.sigma = detail::singular_values(out.P);
        return out;
    }

    struct RankReport
    {
        RVector sigma;
        double sigma_ratio = 0.0;     // sigma_2 / sigma_1
        double proportionality = 0.0; // max_i ||p_i s_i - p_1 s_1|| / ||p_1 s_1||
        double sigma_min = 0.0;
    };

    inline RankReport verify_rank_structure(const CMatrix &P, const CVector &s)
    {
        if (P.cols() != s.size())
            throw ContractError("verify_rank_structure: P columns must match the symbol count");
        RankReport r;
        r.sigma = detail::singular_values(P);
        if (r.sigma.size() > 1 && r.sigma(0) > 0.0)
            r.sigma_ratio = r.sigma(1) / r.sigma(0);
        r.sigma_min = r.sigma.size() ? r.sigma(r.sigma.size() - 1) : 0.0;
        if (s.size() > 0)
        {
            const CVector ref = P.col(0) * s(0);
            const double nref = ref.norm();
            for (Index i = 1; i < s.size(); ++i)
            {
                const double dev = (P.col(i) * s(i) - ref).norm();
                r.proportionality = std::max(r.proportionality, nref > 0.0 ? dev / nref : dev);
            }
        }
        return r;
    }

    // Minimum eigenvalue of the Hermitian part of the top KL x KL block.
    inline double top_block_min_eig(const CMatrix &P)
    {
        const Index n = P.cols();
        if (P.rows() < n)
            throw ContractError("top_block_min_eig: P has fewer rows than columns");
        const CMatrix X = P.topRows(n);
        return eig_hermitian(0.5 * (X + X.adjoint())).values(0);
    }

} // namespace slp

#endif
