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

#ifndef SLP_SIM_HPP
#define SLP_SIM_HPP

#include "slp/channel.hpp"
#include "slp/common.hpp"
#include "slp/constellation.hpp"
#include "slp/detection.hpp"
#include "slp/precoding.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace slp
{
    enum class Scheme
    {
        traditional_slp,
        joint_design,
        ssvmp,
        sdp,
        bd
    };

    enum class Detector
    {
        mld,
        qr_mld,
        qrm_mld,
        linear_combiner
    };

    inline constexpr std::array<std::pair<Scheme, std::string_view>, 5> scheme_names{{{Scheme::traditional_slp, "traditional_slp"},
                                                                                       {Scheme::joint_design, "joint_design"},
                                                                                       {Scheme::ssvmp, "ssvmp"},
                                                                                       {Scheme::sdp, "sdp"},
                                                                                       {Scheme::bd, "bd"}}};
    inline constexpr std::array<std::pair<Detector, std::string_view>, 4> detector_names{{{Detector::mld, "mld"},
                                                                                           {Detector::qr_mld, "qr_mld"},
                                                                                           {Detector::qrm_mld, "qrm_mld"},
                                                                                           {Detector::linear_combiner, "linear_combiner"}}};

    inline std::string to_string(Scheme s)
    {
        for (const auto &[k, v] : scheme_names)
            if (k == s)
                return std::string(v);
        return "unknown";
    }

    inline std::string to_string(Detector d)
    {
        for (const auto &[k, v] : detector_names)
            if (k == d)
                return std::string(v);
        return "unknown";
    }

    inline Scheme parse_scheme(std::string_view name)
    {
        for (const auto &[k, v] : scheme_names)
            if (v == name)
                return k;
        throw ConfigError("unknown scheme '" + std::string(name) + "'");
    }

    inline Detector parse_detector(std::string_view name)
    {
        for (const auto &[k, v] : detector_names)
            if (v == name)
                return k;
        throw ConfigError("unknown detector '" + std::string(name) + "'");
    }

    struct SimConfig
    {
        Index N_T = 16;
        Index N_R = 8;
        Index L = 4;
        Index K = 2;
        int order = 16;
        Scheme scheme = Scheme::ssvmp;
        Detector detector = Detector::mld;
        Index M = 8;
        std::vector<double> snr_db_list{0, 5, 10, 15, 20, 25, 30, 35};
        double p = 1.0;
        double kappa = 1e-5;
        Index slots = 2000;
        std::uint64_t master_seed = 1;
        unsigned threads = 0; // 0 selects the hardware concurrency; results do not depend on it
    };

    struct BerRecord
    {
        std::string scheme;
        std::string detector;
        double snr_db = 0.0;
        std::uint64_t slots = 0;
        std::uint64_t bit_errors = 0;
        std::uint64_t bits_total = 0;
        double ber = 0.0;
        std::uint64_t seed = 0;
        double wall_time_ms = 0.0;

        bool operator==(const BerRecord &) const = default;
    };

    struct ConvergenceTrace
    {
        double p = 0.0;
        std::vector<double> t;
        std::vector<double> deltas;
    };

    inline void validate(const SimConfig &cfg)
    {
        if (cfg.K < 1 || cfg.L < 1 || cfg.N_R < 1 || cfg.N_T < 1)
            throw ConfigError("dimensions must be positive");
        if (cfg.L > cfg.N_R)
            throw ConfigError("L must not exceed N_R");
        if (cfg.N_T < cfg.K * cfg.L)
            throw ConfigError("N_T must be at least K*L");
        const Constellation c = build_constellation(cfg.order);
        if (cfg.slots < 1)
            throw ConfigError("slots must be positive");
        if (cfg.snr_db_list.empty())
            throw ConfigError("snr_db_list is empty");
        for (double v : cfg.snr_db_list)
            if (!std::isfinite(v))
                throw ConfigError("snr_db_list contains a non-finite value");
        if (!(cfg.p > 0.0) || !std::isfinite(cfg.p))
            throw ConfigError("p must be positive");
        if (!(cfg.kappa > 0.0))
            throw ConfigError("kappa must be positive");
        if (cfg.detector == Detector::linear_combiner && cfg.scheme != Scheme::joint_design)
            throw ConfigError("linear_combiner requires scheme joint_design");
        if (cfg.detector == Detector::qrm_mld && cfg.M < 1)
            throw ConfigError("M must be at least 1");
        const bool exhaustive = cfg.detector == Detector::mld || cfg.detector == Detector::qr_mld ||
                                (cfg.detector == Detector::qrm_mld && (cfg.scheme == Scheme::traditional_slp || cfg.scheme == Scheme::joint_design));
        if (exhaustive && std::pow(static_cast<double>(c.size()), static_cast<double>(cfg.L)) > default_mld_guard)
            throw ConfigError("exhaustive detection over " + std::to_string(c.size()) + "^" + std::to_string(cfg.L) + " candidates exceeds the guard");
        if (cfg.scheme == Scheme::bd && cfg.N_T - (cfg.K - 1) * cfg.N_R < cfg.L)
            throw ConfigError("bd needs N_T - (K-1) N_R >= L");
    }

    namespace detail
    {
        struct Transmission
        {
            CMatrix P;
            CombinerSet combiners; // joint design only
            double margin = 1.0;   // joint design CI margin
            double gain = 1.0;     // effective-channel factor (K for the SLP family)
        };

        inline Transmission precode(const SimConfig &cfg, const ChannelSet &H, const CVector &s, const Constellation &c)
        {
            Transmission tx;
            tx.gain = static_cast<double>(cfg.K);
            switch (cfg.scheme)
            {
            case Scheme::traditional_slp:
                tx.P = slp_closed_form(build_ci_geometry(CombinerSet::selector(cfg.K, cfg.L, cfg.N_R), H, s, c), cfg.p).P;
                break;
            case Scheme::joint_design:
            {
                JointDesignOutcome jd = joint_design_ao(H, s, c, cfg.p, cfg.kappa);
                tx.P = std::move(jd.precode.P);
                tx.margin = jd.precode.t;
                tx.combiners = std::move(jd.combiners);
                break;
            }
            case Scheme::ssvmp:
                tx.P = ssvmp_precoder(H, s, c, cfg.p).P;
                break;
            case Scheme::sdp:
                tx.P = sdp_precoder(s, c, cfg.p, cfg.K, cfg.L, cfg.N_T).P;
                break;
            case Scheme::bd:
                tx.P = bd_precoder(H, cfg.L, cfg.p).P;
                tx.gain = 1.0;
                break;
            }
            return tx;
        }

        inline std::vector<std::uint8_t> draw_bits(std::size_t n, const RngStream &rng)
        {
            auto eng = rng.engine();
            std::vector<std::uint8_t> bits(n);
            std::uint64_t word = 0;
            for (std::size_t i = 0; i < n; ++i)
            {
                if (i % 64 == 0)
                    word = eng();
                bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
            }
            return bits;
        }

        inline DetectionResult detect(const SimConfig &cfg, const CVector &y, const CMatrix &H_k, const Transmission &tx, Index k, const Constellation &c)
        {
            if (cfg.detector == Detector::linear_combiner)
                return combine_and_demod(y, tx.combiners.per_user[static_cast<std::size_t>(k)], c, tx.margin);
            const CMatrix M = effective_channel(H_k, tx.P, k, cfg.L, tx.gain);
            switch (cfg.detector)
            {
            case Detector::mld:
                return mld_detect(y, M, c);
            case Detector::qr_mld:
                return qr_mld_detect(y, M, c);
            default:
                return qrm_mld_detect(y, M, c, cfg.M);
            }
        }

        struct SlotTally
        {
            std::vector<std::uint64_t> errors;
            std::vector<double> detect_ms;
            double precode_ms = 0.0;
        };

        inline void run_slot(const SimConfig &cfg, const Constellation &c, std::uint64_t slot, SlotTally &tally)
        {
            using clock = std::chrono::steady_clock;
            const auto t0 = clock::now();
            const ChannelSet H = sample_channel(cfg.K, cfg.N_R, cfg.N_T, RngStream(cfg.master_seed, slot, Purpose::channel));
            const std::size_t bits_per_user = static_cast<std::size_t>(cfg.L * c.bits_per_symbol);
            const std::vector<std::uint8_t> bits = draw_bits(bits_per_user * static_cast<std::size_t>(cfg.K), RngStream(cfg.master_seed, slot, Purpose::bits));
            const CVector s = map_bits(bits, c);
            const Transmission tx = precode(cfg, H, s, c);
            const CVector x = tx.P * s;
            tally.precode_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();

            for (Index k = 0; k < cfg.K; ++k)
            {
                const CMatrix &Hk = H.per_user[static_cast<std::size_t>(k)];
                const CVector clean = Hk * x;
                const CVector unit_noise = sample_cn(cfg.N_R, RngStream(cfg.master_seed, slot, Purpose::noise, static_cast<std::uint64_t>(k)));
                for (std::size_t i = 0; i < cfg.snr_db_list.size(); ++i)
                {
                    const auto t1 = clock::now();
                    const double sigma = std::sqrt(std::pow(10.0, -cfg.snr_db_list[i] / 10.0));
                    const CVector y = clean + sigma * unit_noise;
                    const DetectionResult det = detect(cfg, y, Hk, tx, k, c);
                    const DemapResult rx = demap(det.symbols, c);
                    std::uint64_t errs = 0;
                    for (std::size_t b = 0; b < bits_per_user; ++b)
                        errs += rx.bits[b] != bits[static_cast<std::size_t>(k) * bits_per_user + b];
                    tally.errors[i] += errs;
                    tally.detect_ms[i] += std::chrono::duration<double, std::milli>(clock::now() - t1).count();
                }
            }
        }
    } // namespace detail

    inline std::vector<BerRecord> run_ber_sweep(const SimConfig &cfg)
    {
        validate(cfg);
        const Constellation c = build_constellation(cfg.order);
        const std::size_t npts = cfg.snr_db_list.size();
        const auto slots = static_cast<std::uint64_t>(cfg.slots);
        unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
        workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, slots));

        std::atomic<std::uint64_t> next{0};
        std::vector<detail::SlotTally> tallies(workers);
        std::mutex fail_mutex;
        std::exception_ptr failure;
        std::uint64_t failure_slot = slots;

        auto work = [&](unsigned id) {
            detail::SlotTally &tally = tallies[id];
            tally.errors.assign(npts, 0);
            tally.detect_ms.assign(npts, 0.0);
            for (;;)
            {
                const std::uint64_t slot = next.fetch_add(1);
                if (slot >= slots)
                    return;
                try
                {
                    detail::run_slot(cfg, c, slot, tally);
                }
                catch (...)
                {
                    // Keep the failure of the lowest slot so the reported error is reproducible.
                    std::lock_guard<std::mutex> lock(fail_mutex);
                    if (slot < failure_slot)
                    {
                        failure_slot = slot;
                        failure = std::current_exception();
                    }
                }
            }
        };

        if (workers <= 1)
            work(0);
        else
        {
            std::vector<std::thread> pool;
            for (unsigned id = 0; id < workers; ++id)
                pool.emplace_back(work, id);
            for (auto &t : pool)
                t.join();
        }
        if (failure)
            std::rethrow_exception(failure);

        std::vector<BerRecord> out;
        double precode_ms = 0.0;
        for (const auto &t : tallies)
            precode_ms += t.precode_ms;
        const std::uint64_t bits_total = slots * static_cast<std::uint64_t>(cfg.K * cfg.L * c.bits_per_symbol);
        for (std::size_t i = 0; i < npts; ++i)
        {
            BerRecord r;
            r.scheme = to_string(cfg.scheme);
            r.detector = to_string(cfg.detector);
            r.snr_db = cfg.snr_db_list[i];
            r.slots = slots;
            r.bits_total = bits_total;
            for (const auto &t : tallies)
            {
                r.bit_errors += t.errors[i];
                r.wall_time_ms += t.detect_ms[i];
            }
            r.wall_time_ms += precode_ms / static_cast<double>(npts);
            r.ber = static_cast<double>(r.bit_errors) / static_cast<double>(r.bits_total);
            r.seed = cfg.master_seed;
            out.push_back(std::move(r));
        }
        return out;
    }

    inline std::vector<ConvergenceTrace> run_convergence_probe(const SimConfig &cfg, const std::vector<double> &p_list)
    {
        validate(cfg);
        if (cfg.scheme != Scheme::joint_design)
            throw ConfigError("the convergence probe requires scheme joint_design");
        const Constellation c = build_constellation(cfg.order);
        const ChannelSet H = sample_channel(cfg.K, cfg.N_R, cfg.N_T, RngStream(cfg.master_seed, 0, Purpose::channel));
        const CVector s = map_bits(detail::draw_bits(static_cast<std::size_t>(cfg.K * cfg.L * c.bits_per_symbol), RngStream(cfg.master_seed, 0, Purpose::bits)), c);
        std::vector<ConvergenceTrace> out;
        for (double p : p_list)
        {
            const JointDesignOutcome jd = joint_design_ao(H, s, c, p, cfg.kappa);
            ConvergenceTrace tr;
            tr.p = p;
            tr.t = jd.t_trace;
            double prev = 0.0;
            for (double t : tr.t)
            {
                tr.deltas.push_back(std::abs(t - prev));
                prev = t;
            }
            out.push_back(std::move(tr));
        }
        return out;
    }

    // ---- export ----

    namespace detail
    {
        inline std::string format_double(double v)
        {
            std::array<char, 64> buf{};
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
            return std::string(buf.data(), res.ptr);
        }

        inline std::string format_fixed(double v, int precision)
        {
            std::array<char, 64> buf{};
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
            return std::string(buf.data(), res.ptr);
        }
    } // namespace detail

    inline constexpr std::string_view csv_header = "scheme,detector,snr_db,slots,bit_errors,bits_total,ber,seed,wall_time_ms";

    inline std::string to_csv(const std::vector<BerRecord> &records)
    {
        std::string out(csv_header);
        out += '\n';
        for (const auto &r : records)
        {
            out += r.scheme + ',' + r.detector + ',' + detail::format_double(r.snr_db) + ',' + std::to_string(r.slots) + ',' +
                   std::to_string(r.bit_errors) + ',' + std::to_string(r.bits_total) + ',' + detail::format_double(r.ber) + ',' +
                   std::to_string(r.seed) + ',' + detail::format_fixed(r.wall_time_ms, 3) + '\n';
        }
        return out;
    }

    inline nlohmann::json to_json(const std::vector<BerRecord> &records)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &r : records)
            arr.push_back({{"scheme", r.scheme},
                           {"detector", r.detector},
                           {"snr_db", r.snr_db},
                           {"slots", r.slots},
                           {"bit_errors", r.bit_errors},
                           {"bits_total", r.bits_total},
                           {"ber", r.ber},
                           {"seed", r.seed},
                           {"wall_time_ms", r.wall_time_ms}});
        return arr;
    }

    inline std::vector<BerRecord> records_from_json(const nlohmann::json &arr)
    {
        std::vector<BerRecord> out;
        try
        {
            for (const auto &j : arr)
            {
                BerRecord r;
                r.scheme = j.at("scheme").get<std::string>();
                r.detector = j.at("detector").get<std::string>();
                r.snr_db = j.at("snr_db").get<double>();
                r.slots = j.at("slots").get<std::uint64_t>();
                r.bit_errors = j.at("bit_errors").get<std::uint64_t>();
                r.bits_total = j.at("bits_total").get<std::uint64_t>();
                r.ber = j.at("ber").get<double>();
                r.seed = j.at("seed").get<std::uint64_t>();
                r.wall_time_ms = j.at("wall_time_ms").get<double>();
                out.push_back(std::move(r));
            }
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(std::string("malformed result records: ") + e.what());
        }
        return out;
    }

    inline void write_text(const std::string &path, const std::string &text)
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open output file", path);
        f << text;
        f.flush();
        if (!f)
            throw IoError("write failed", path);
    }

    inline void export_results(const std::vector<BerRecord> &records, const std::string &path, const std::string &format)
    {
        if (format == "csv")
            write_text(path, to_csv(records));
        else if (format == "json")
            write_text(path, to_json(records).dump(2) + "\n");
        else
            throw ConfigError("unknown output format '" + format + "'");
    }

    inline std::vector<BerRecord> load_results_json(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw IoError("cannot open input file", path);
        try
        {
            return records_from_json(nlohmann::json::parse(f));
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
        }
    }

    inline std::string traces_to_csv(const std::vector<ConvergenceTrace> &traces)
    {
        std::string out = "p,iteration,t,delta\n";
        for (const auto &tr : traces)
            for (std::size_t i = 0; i < tr.t.size(); ++i)
                out += detail::format_double(tr.p) + ',' + std::to_string(i + 1) + ',' + detail::format_double(tr.t[i]) + ',' +
                       detail::format_double(tr.deltas[i]) + '\n';
        return out;
    }

    inline nlohmann::json traces_to_json(const std::vector<ConvergenceTrace> &traces)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &tr : traces)
            arr.push_back({{"p", tr.p}, {"t", tr.t}, {"deltas", tr.deltas}});
        return arr;
    }

    // ---- configuration ----

    inline void apply_json(SimConfig &cfg, const nlohmann::json &j)
    {
        if (!j.is_object())
            throw ConfigError("configuration must be a JSON object");
        try
        {
            for (const auto &[key, value] : j.items())
            {
                if (key == "N_T")
                    cfg.N_T = value.get<Index>();
                else if (key == "N_R")
                    cfg.N_R = value.get<Index>();
                else if (key == "L")
                    cfg.L = value.get<Index>();
                else if (key == "K")
                    cfg.K = value.get<Index>();
                else if (key == "order")
                    cfg.order = value.get<int>();
                else if (key == "scheme")
                    cfg.scheme = parse_scheme(value.get<std::string>());
                else if (key == "detector")
                    cfg.detector = parse_detector(value.get<std::string>());
                else if (key == "M")
                    cfg.M = value.get<Index>();
                else if (key == "snr_db_list")
                    cfg.snr_db_list = value.get<std::vector<double>>();
                else if (key == "p")
                    cfg.p = value.get<double>();
                else if (key == "kappa")
                    cfg.kappa = value.get<double>();
                else if (key == "slots")
                    cfg.slots = value.get<Index>();
                else if (key == "master_seed")
                    cfg.master_seed = value.get<std::uint64_t>();
                else if (key == "threads")
                    cfg.threads = value.get<unsigned>();
                else
                    throw ConfigError("unknown configuration key '" + key + "'");
            }
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(std::string("invalid configuration value: ") + e.what());
        }
    }

    inline SimConfig load_config(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw ConfigError("cannot open configuration file " + path);
        SimConfig cfg;
        try
        {
            apply_json(cfg, nlohmann::json::parse(f));
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError("invalid JSON in " + path + ": " + e.what());
        }
        return cfg;
    }

    inline nlohmann::json config_to_json(const SimConfig &cfg)
    {
        return {{"N_T", cfg.N_T}, {"N_R", cfg.N_R}, {"L", cfg.L}, {"K", cfg.K}, {"order", cfg.order}, {"scheme", to_string(cfg.scheme)},
                {"detector", to_string(cfg.detector)}, {"M", cfg.M}, {"snr_db_list", cfg.snr_db_list}, {"p", cfg.p},
                {"kappa", cfg.kappa}, {"slots", cfg.slots}, {"master_seed", cfg.master_seed}, {"threads", cfg.threads}};
    }

} // namespace slp

#endif
