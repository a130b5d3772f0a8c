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

#ifndef SLP_DETECTION_HPP
#define SLP_DETECTION_HPP

#include "slp/common.hpp"
#include "slp/constellation.hpp"
#include "slp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace slp
{
    struct DetectionResult
    {
        CVector symbols;
        std::vector<int> indices; // constellation index per stream
        double metric = 0.0;      // ||y - M s||^2 of the returned candidate
        std::uint64_t candidates_explored = 0;
        bool used_fallback = false; // QR-based search replaced by exhaustive MLD
    };

    inline constexpr double default_mld_guard = 1e7;

    // Matrix multiplying user k's symbols in its noiseless received signal.
    inline CMatrix effective_channel(const CMatrix &H_k, const CMatrix &P, Index k, Index L, double gain = 1.0)
    {
        return gain * H_k * P.middleCols(k * L, L);
    }

    namespace detail
    {
        inline double candidate_count(const Constellation &c, Index L)
        {
            return std::pow(static_cast<double>(c.size()), static_cast<double>(L));
        }

        inline DetectionResult finish(const std::vector<int> &idx, double metric, std::uint64_t explored, const Constellation &c)
        {
            DetectionResult r;
            r.indices = idx;
            r.symbols.resize(static_cast<Index>(idx.size()));
            for (std::size_t l = 0; l < idx.size(); ++l)
                r.symbols(static_cast<Index>(l)) = c.points[static_cast<std::size_t>(idx[l])];
            r.metric = metric;
            r.candidates_explored = explored;
            return r;
        }

        struct MldSearch
        {
            Index nr = 0, L = 0;
            int mc = 0;
            std::vector<double> table; // [l][i][r][re,im] of M(:,l) * point_i
            std::vector<double> partial; // [level][r][re,im]
            std::vector<int> cur, best;
            double best_metric = std::numeric_limits<double>::infinity();

            const double *column(Index l, int i) const { return table.data() + ((l * mc + i) * nr) * 2; }

            void descend(Index l)
            {
                const double *base = partial.data() + l * nr * 2;
                if (l + 1 == L)
                {
                    for (int i = 0; i < mc; ++i)
                    {
                        const double *col = column(l, i);
                        double m = 0.0;
                        for (Index r = 0; r < 2 * nr; ++r)
                        {
                            const double d = base[r] - col[r];
                            m += d * d;
                        }
                        if (m < best_metric)
                        {
                            best_metric = m;
                            cur[static_cast<std::size_t>(l)] = i;
                            best = cur;
                        }
                    }
                    return;
                }
                double *next = partial.data() + (l + 1) * nr * 2;
                for (int i = 0; i < mc; ++i)
                {
                    const double *col = column(l, i);
                    for (Index r = 0; r < 2 * nr; ++r)
                        next[r] = base[r] - col[r];
                    cur[static_cast<std::size_t>(l)] = i;
                    descend(l + 1);
                }
            }
        };
    } // namespace detail

    inline DetectionResult mld_detect(const CVector &y, const CMatrix &M, const Constellation &c, double guard = default_mld_guard)
    {
        const Index nr = M.rows(), L = M.cols();
        if (y.size() != nr)
            throw ContractError("mld_detect: received vector length does not match the channel");
        if (L < 1)
            throw ContractError("mld_detect: no streams");
        const double count = detail::candidate_count(c, L);
        if (count > guard)
            throw BudgetError("mld_detect: " + std::to_string(static_cast<long double>(count)) + " candidates exceed the guard");

        detail::MldSearch s;
        s.nr = nr;
        s.L = L;
        s.mc = c.size();
        s.table.resize(static_cast<std::size_t>(L * s.mc * nr * 2));
        for (Index l = 0; l < L; ++l)
            for (int i = 0; i < s.mc; ++i)
            {
                double *dst = s.table.data() + ((l * s.mc + i) * nr) * 2;
                for (Index r = 0; r < nr; ++r)
                {
                    const cplx v = M(r, l) * c.points[static_cast<std::size_t>(i)];
                    dst[2 * r] = v.real();
                    dst[2 * r + 1] = v.imag();
                }
            }
        s.partial.resize(static_cast<std::size_t>((L + 1) * nr * 2));
        for (Index r = 0; r < nr; ++r)
        {
            s.partial[static_cast<std::size_t>(2 * r)] = y(r).real();
            s.partial[static_cast<std::size_t>(2 * r + 1)] = y(r).imag();
        }
        s.cur.assign(static_cast<std::size_t>(L), 0);
        s.best = s.cur;
        s.descend(0);
        return detail::finish(s.best, s.best_metric, static_cast<std::uint64_t>(count), c);
    }

    namespace detail
    {
        struct TriangularSystem
        {
            CVector y_rot;       // Q^H y
            CMatrix R;           // upper triangular
            double residual = 0; // ||y||^2 - ||Q^H y||^2, the part no candidate can explain
            bool full_rank = false;
        };

        inline TriangularSystem triangularize(const CVector &y, const CMatrix &M)
        {
            TriangularSystem t;
            if (M.rows() < M.cols())
                return t;
            const QrResult qr = qr_decompose(M);
            t.R = qr.R;
            t.y_rot = qr.Q.adjoint() * y;
            t.residual = std::max(0.0, (y - qr.Q * t.y_rot).squaredNorm());
            const RVector diag = t.R.diagonal().real();
            t.full_rank = diag.size() > 0 && diag.minCoeff() > 1e-10 * std::max(diag.maxCoeff(), 1e-300);
            return t;
        }

        inline std::uint64_t row_major_key(const std::vector<int> &idx, int mc)
        {
            std::uint64_t key = 0;
            for (int v : idx)
                key = key * static_cast<std::uint64_t>(mc) + static_cast<std::uint64_t>(v < 0 ? 0 : v);
            return key;
        }

        // Increment of the tree metric at row j given the already decided streams j+1..L-1.
        inline double row_metric(const TriangularSystem &t, const Constellation &c, const std::vector<int> &idx, Index j, int candidate)
        {
            const Index L = t.R.cols();
            cplx acc = t.y_rot(j) - t.R(j, j) * c.points[static_cast<std::size_t>(candidate)];
            for (Index m = j + 1; m < L; ++m)
                acc -= t.R(j, m) * c.points[static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])];
            return std::norm(acc);
        }
    } // namespace detail

    inline DetectionResult qr_mld_detect(const CVector &y, const CMatrix &M, const Constellation &c, double guard = default_mld_guard)
    {
        const Index L = M.cols();
        if (y.size() != M.rows())
            throw ContractError("qr_mld_detect: received vector length does not match the channel");
        if (detail::candidate_count(c, L) > guard)
            throw BudgetError("qr_mld_detect: candidate count exceeds the guard");
        const detail::TriangularSystem t = detail::triangularize(y, M);
        if (!t.full_rank)
        {
            DetectionResult r = mld_detect(y, M, c, guard);
            r.used_fallback = true;
            return r;
        }

        // Depth-first search over the whole tree, last row first. A branch is abandoned only
        // when its partial metric already exceeds the incumbent, so the optimum is exact.
        const int mc = c.size();
        std::vector<int> idx(static_cast<std::size_t>(L), -1), best;
        double best_metric = std::numeric_limits<double>::infinity();
        std::uint64_t best_key = 0, explored = 0;
        std::vector<double> level_metric(static_cast<std::size_t>(L + 1), 0.0);

        auto visit = [&](auto &&self, Index j) -> void {
            for (int i = 0; i < mc; ++i)
            {
                ++explored;
                const double m = level_metric[static_cast<std::size_t>(j + 1)] + detail::row_metric(t, c, idx, j, i);
                if (m > best_metric)
                    continue;
                idx[static_cast<std::size_t>(j)] = i;
                if (j == 0)
                {
                    const std::uint64_t key = detail::row_major_key(idx, mc);
                    if (m < best_metric || key < best_key)
                    {
                        best_metric = m;
                        best_key = key;
                        best = idx;
                    }
                }
                else
                {
                    level_metric[static_cast<std::size_t>(j)] = m;
                    self(self, j - 1);
                }
                idx[static_cast<std::size_t>(j)] = -1;
            }
        };
        visit(visit, L - 1);
        return detail::finish(best, best_metric + t.residual, explored, c);
    }

    inline DetectionResult qrm_mld_detect(const CVector &y, const CMatrix &M, const Constellation &c, Index survivors, double guard = default_mld_guard)
    {
        const Index L = M.cols();
        if (survivors < 1)
            throw ConfigError("qrm_mld_detect: M must be at least 1");
        if (y.size() != M.rows())
            throw ContractError("qrm_mld_detect: received vector length does not match the channel");
        const detail::TriangularSystem t = detail::triangularize(y, M);
        if (!t.full_rank)
        {
            DetectionResult r = mld_detect(y, M, c, guard);
            r.used_fallback = true;
            return r;
        }

        struct Path
        {
            double metric;
            std::uint64_t key;
            std::vector<int> idx;
        };
        const int mc = c.size();
        std::vector<Path> paths{{0.0, 0, std::vector<int>(static_cast<std::size_t>(L), -1)}};
        std::uint64_t explored = 0;
        for (Index j = L - 1; j >= 0; --j)
        {
            std::vector<Path> next;
            next.reserve(paths.size() * static_cast<std::size_t>(mc));
            for (const Path &p : paths)
                for (int i = 0; i < mc; ++i)
                {
                    Path q{p.metric + detail::row_metric(t, c, p.idx, j, i), 0, p.idx};
                    q.idx[static_cast<std::size_t>(j)] = i;
                    q.key = detail::row_major_key(q.idx, mc);
                    next.push_back(std::move(q));
                }
            explored += next.size();
            const auto keep = std::min<std::size_t>(j == 0 ? 1 : static_cast<std::size_t>(survivors), next.size());
            std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(keep), next.end(),
                              [](const Path &a, const Path &b) { return a.metric < b.metric || (a.metric == b.metric && a.key < b.key); });
            next.resize(keep);
            paths = std::move(next);
        }
        return detail::finish(paths.front().idx, paths.front().metric + t.residual, explored, c);
    }

    // s_hat = W y / scale, then per-stream slicing. scale is the CI margin known to the receiver.
    inline DetectionResult combine_and_demod(const CVector &y, const CMatrix &W, const Constellation &c, double scale = 1.0)
    {
        if (W.cols() != y.size())
            throw ContractError("combine_and_demod: combiner width does not match the received vector");
        if (!(scale > 0.0))
            throw ContractError("combine_and_demod: scale must be positive");
        const CVector s_hat = W * y / scale;
        const DemapResult d = demap(s_hat, c);
        DetectionResult r = detail::finish(d.indices, (s_hat - d.symbols).squaredNorm(), static_cast<std::uint64_t>(W.rows() * c.size()), c);
        return r;
    }

    // Lower bound on Tr(A B) for PSD A, B from the oppositely ordered spectra.
    inline double von_neumann_bound(const CMatrix &A, const CMatrix &B)
    {
        if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
            throw ContractError("von_neumann_bound: matrices must be square and of equal size");
        const RVector la = eig_hermitian(A).values;
        const RVector lb = eig_hermitian(B).values;
        const Index n = la.size();
        if (n == 0)
            return 0.0;
        if (la(0) < -1e-9 * std::max(1.0, std::abs(la(n - 1))) || lb(0) < -1e-9 * std::max(1.0, std::abs(lb(n - 1))))
            throw ContractError("von_neumann_bound: input is not positive semidefinite");
        // Ascending spectra: the largest eigenvalue of A pairs with the smallest of B.
        double bound = 0.0;
        for (Index i = 0; i < n; ++i)
            bound += la(n - 1 - i) * lb(i);
        return bound;
    }

} // namespace slp

#endif
