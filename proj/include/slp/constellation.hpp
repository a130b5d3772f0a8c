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

#ifndef SLP_CONSTELLATION_HPP
#define SLP_CONSTELLATION_HPP

#include "slp/common.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slp
{
    // Normalized square QAM alphabet with per-axis Gray labels.
    // Point index i = real_level * side + imag_level, levels ascending, so index order
    // is lexicographic in (real part, imaginary part).
    struct Constellation
    {
        int order = 0;
        int side = 0;            // levels per axis, sqrt(order)
        int bits_per_symbol = 0; // log2(order)
        double norm_factor = 0.0;
        std::vector<cplx> points;
        std::vector<std::uint32_t> labels;   // label of point i, MSB first when serialized
        std::vector<int> point_of_label;     // inverse of labels

        double max_coordinate() const { return (side - 1) * norm_factor; }
        int size() const { return order; }
    };

    enum class PointKind
    {
        A, // inner in both dimensions
        B, // real part on the outer rim
        C, // imaginary part on the outer rim
        D  // corner
    };

    struct PointClass
    {
        PointKind kind = PointKind::A;
        bool real_scalable = false;
        bool imag_scalable = false;
    };

    struct SymbolBases
    {
        cplx s_R;
        cplx s_J;
    };

    struct IndexPartition
    {
        std::vector<Index> outer_indices; // into the 2KL component vector, ascending
        std::vector<Index> inner_indices;
        std::vector<Index> order;         // order[m] = component placed at position m
        RMatrix permutation;              // E, rows e_{order[m]}^T

        Index outer_count() const { return static_cast<Index>(outer_indices.size()); }
        Index dimension() const { return static_cast<Index>(order.size()); }
    };

    struct DemapResult
    {
        CVector symbols;
        std::vector<std::uint8_t> bits;
        std::vector<int> indices;
    };

    namespace detail
    {
        inline std::uint32_t gray(std::uint32_t i) { return i ^ (i >> 1); }

        inline int axis_level(double coord, const Constellation &c)
        {
            // Levels sit at integer positions 0..side-1; half-way points resolve downward.
            const double u = (coord / c.norm_factor + (c.side - 1)) / 2.0;
            double idx = std::ceil(u - 0.5);
            if (!(idx >= 0.0))
                idx = 0.0;
            if (idx > c.side - 1)
                idx = c.side - 1;
            return static_cast<int>(idx);
        }

        inline int find_point(cplx s, const Constellation &c)
        {
            const int ri = axis_level(s.real(), c);
            const int ii = axis_level(s.imag(), c);
            const int idx = ri * c.side + ii;
            if (!(std::abs(s - c.points[idx]) <= 1e-9))
                return -1;
            return idx;
        }
    } // namespace detail

    inline Constellation build_constellation(int order)
    {
        if (order != 4 && order != 16 && order != 64)
            throw ConfigError("unsupported modulation order " + std::to_string(order));

        Constellation c;
        c.order = order;
        c.side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
        c.bits_per_symbol = static_cast<int>(std::lround(std::log2(static_cast<double>(order))));
        c.norm_factor = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);

        const int half_bits = c.bits_per_symbol / 2;
        c.points.resize(order);
        c.labels.resize(order);
        c.point_of_label.assign(order, -1);
        for (int ri = 0; ri < c.side; ++ri)
            for (int ii = 0; ii < c.side; ++ii)
            {
                const int idx = ri * c.side + ii;
                const double re = (2 * ri - (c.side - 1)) * c.norm_factor;
                const double im = (2 * ii - (c.side - 1)) * c.norm_factor;
                c.points[idx] = cplx(re, im);
                const std::uint32_t label = (detail::gray(ri) << half_bits) | detail::gray(ii);
                c.labels[idx] = label;
                c.point_of_label[label] = idx;
            }
        return c;
    }

    inline PointClass classify_point(cplx s, const Constellation &c)
    {
        if (detail::find_point(s, c) < 0)
            throw InvalidSymbolError("symbol is not a member of the constellation");
        const double rim = c.max_coordinate();
        PointClass pc;
        pc.real_scalable = std::abs(std::abs(s.real()) - rim) <= 1e-9;
        pc.imag_scalable = std::abs(std::abs(s.imag()) - rim) <= 1e-9;
        if (pc.real_scalable && pc.imag_scalable)
            pc.kind = PointKind::D;
        else if (pc.real_scalable)
            pc.kind = PointKind::B;
        else if (pc.imag_scalable)
            pc.kind = PointKind::C;
        else
            pc.kind = PointKind::A;
        return pc;
    }

    inline SymbolBases decompose_symbol(cplx s)
    {
        return {cplx(s.real(), 0.0), cplx(0.0, s.imag())};
    }

    inline IndexPartition build_index_partition(const CVector &s, const Constellation &c)
    {
        IndexPartition part;
        const Index n = 2 * s.size();
        for (Index i = 0; i < s.size(); ++i)
        {
            const PointClass pc = classify_point(s(i), c);
            (pc.real_scalable ? part.outer_indices : part.inner_indices).push_back(2 * i);
            (pc.imag_scalable ? part.outer_indices : part.inner_indices).push_back(2 * i + 1);
        }
        // Component lists are built in index order, so sorting keeps the original relative order.
        std::sort(part.outer_indices.begin(), part.outer_indices.end());
        std::sort(part.inner_indices.begin(), part.inner_indices.end());

        part.order = part.outer_indices;
        part.order.insert(part.order.end(), part.inner_indices.begin(), part.inner_indices.end());
        part.permutation = RMatrix::Zero(n, n);
        for (Index m = 0; m < n; ++m)
            part.permutation(m, part.order[m]) = 1.0;
        return part;
    }

    inline CVector map_bits(std::span<const std::uint8_t> bits, const Constellation &c)
    {
        const auto bps = static_cast<std::size_t>(c.bits_per_symbol);
        if (bits.size() % bps != 0)
            throw ConfigError("bit string length " + std::to_string(bits.size()) + " is not a multiple of " + std::to_string(bps));
        const Index n = static_cast<Index>(bits.size() / bps);
        CVector out(n);
        for (Index i = 0; i < n; ++i)
        {
            std::uint32_t label = 0;
            for (std::size_t b = 0; b < bps; ++b)
                label = (label << 1) | (bits[static_cast<std::size_t>(i) * bps + b] & 1u);
            out(i) = c.points[c.point_of_label[label]];
        }
        return out;
    }

    inline DemapResult demap(const CVector &s_hat, const Constellation &c)
    {
        DemapResult r;
        r.symbols.resize(s_hat.size());
        r.indices.resize(static_cast<std::size_t>(s_hat.size()));
        r.bits.reserve(static_cast<std::size_t>(s_hat.size() * c.bits_per_symbol));
        for (Index i = 0; i < s_hat.size(); ++i)
        {
            const int idx = detail::axis_level(s_hat(i).real(), c) * c.side + detail::axis_level(s_hat(i).imag(), c);
            r.indices[static_cast<std::size_t>(i)] = idx;
            r.symbols(i) = c.points[idx];
            const std::uint32_t label = c.labels[idx];
            for (int b = c.bits_per_symbol - 1; b >= 0; --b)
                r.bits.push_back(static_cast<std::uint8_t>((label >> b) & 1u));
        }
        return r;
    }

    // Index of each symbol in the alphabet; throws on non-members.
    inline std::vector<int> symbol_indices(const CVector &s, const Constellation &c)
    {
        std::vector<int> out(static_cast<std::size_t>(s.size()));
        for (Index i = 0; i < s.size(); ++i)
        {
            const int idx = detail::find_point(s(i), c);
            if (idx < 0)
                throw InvalidSymbolError("symbol is not a member of the constellation");
            out[static_cast<std::size_t>(i)] = idx;
        }
        return out;
    }

} // namespace slp

#endif
