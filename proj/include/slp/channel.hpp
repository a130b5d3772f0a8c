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

#ifndef SLP_CHANNEL_HPP
#define SLP_CHANNEL_HPP

#include "slp/common.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace slp
{
    struct ChannelSet
    {
        std::vector<CMatrix> per_user; // K matrices N_R x N_T
        CMatrix stacked;               // K*N_R x N_T

        Index users() const { return static_cast<Index>(per_user.size()); }
        Index rx_antennas() const { return per_user.empty() ? 0 : per_user.front().rows(); }
        Index tx_antennas() const { return stacked.cols(); }

        static ChannelSet from_users(std::vector<CMatrix> users)
        {
            ChannelSet cs;
            if (users.empty())
                return cs;
            const Index nr = users.front().rows(), nt = users.front().cols();
            cs.stacked.resize(nr * static_cast<Index>(users.size()), nt);
            for (std::size_t k = 0; k < users.size(); ++k)
            {
                if (users[k].rows() != nr || users[k].cols() != nt)
                    throw ContractError("channel set: users have different shapes");
                cs.stacked.middleRows(static_cast<Index>(k) * nr, nr) = users[k];
            }
            cs.per_user = std::move(users);
            return cs;
        }
    };

    enum class Purpose : std::uint64_t
    {
        channel = 1,
        bits = 2,
        noise = 3,
        test = 4
    };

    // Counter-based stream: the draws depend only on (master_seed, trial, purpose, lane),
    // never on the order in which streams are consumed.
    struct RngStream
    {
        std::uint64_t master_seed = 0;
        std::uint64_t trial = 0;
        std::uint64_t purpose = 0;
        std::uint64_t lane = 0;

        RngStream() = default;
        RngStream(std::uint64_t seed, std::uint64_t trial_index, Purpose tag, std::uint64_t lane_index = 0)
            : master_seed(seed), trial(trial_index), purpose(static_cast<std::uint64_t>(tag)), lane(lane_index) {}

        static std::uint64_t splitmix64(std::uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }

        std::uint64_t key() const
        {
            std::uint64_t h = splitmix64(master_seed);
            h = splitmix64(h ^ trial);
            h = splitmix64(h ^ purpose);
            return splitmix64(h ^ lane);
        }

        std::mt19937_64 engine() const { return std::mt19937_64(key()); }
    };

    namespace detail
    {
        inline cplx unit_cn(std::mt19937_64 &eng, std::normal_distribution<double> &nd)
        {
            const double re = nd(eng);
            const double im = nd(eng);
            return {re, im};
        }
    } // namespace detail

    inline ChannelSet sample_channel(Index K, Index N_R, Index N_T, const RngStream &rng)
    {
        if (K < 1 || N_R < 1 || N_T < 1)
            throw ConfigError("sample_channel: dimensions must be positive");
        auto eng = rng.engine();
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
        std::vector<CMatrix> users(static_cast<std::size_t>(K), CMatrix(N_R, N_T));
        for (auto &H : users)
            for (Index c = 0; c < N_T; ++c)
                for (Index r = 0; r < N_R; ++r)
                    H(r, c) = detail::unit_cn(eng, nd);
        return ChannelSet::from_users(std::move(users));
    }

    // Unit-variance circular complex Gaussian vector.
    inline CVector sample_cn(Index n, const RngStream &rng)
    {
        auto eng = rng.engine();
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
        CVector v(n);
        for (Index i = 0; i < n; ++i)
            v(i) = detail::unit_cn(eng, nd);
        return v;
    }

    inline CVector awgn(const CVector &y, double sigma2, const RngStream &rng)
    {
        if (!(sigma2 >= 0.0))
            throw ConfigError("awgn: noise variance must be nonnegative");
        if (sigma2 == 0.0)
            return y;
        return y + std::sqrt(sigma2) * sample_cn(y.size(), rng);
    }

} // namespace slp

#endif
