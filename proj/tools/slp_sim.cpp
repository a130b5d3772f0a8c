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

// Command-line front end for the BER sweep and the joint-design convergence probe.

#include "slp/slp.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{
    struct Overrides
    {
        std::optional<long> N_T, N_R, L, K, M, slots;
        std::optional<int> order;
        std::optional<std::string> scheme, detector;
        std::optional<std::vector<double>> snr_db_list;
        std::optional<double> p, kappa;
        std::optional<std::uint64_t> master_seed;
        std::optional<unsigned> threads;
    };

    void add_config_flags(CLI::App &cmd, Overrides &o, std::string &config_path, std::optional<std::uint64_t> &seed)
    {
        cmd.add_option("--config", config_path, "JSON configuration file (SimConfig field names)");
        cmd.add_option("--seed", seed, "master seed (alias of --master_seed)");
        cmd.add_option("--N_T", o.N_T, "transmit antennas");
        cmd.add_option("--N_R", o.N_R, "receive antennas per user");
        cmd.add_option("--L", o.L, "streams per user");
        cmd.add_option("--K", o.K, "users");
        cmd.add_option("--order", o.order, "QAM order (4, 16, 64)");
        cmd.add_option("--scheme", o.scheme, "traditional_slp | joint_design | ssvmp | sdp | bd");
        cmd.add_option("--detector", o.detector, "mld | qr_mld | qrm_mld | linear_combiner");
        cmd.add_option("--M", o.M, "surviving candidates for qrm_mld");
        cmd.add_option("--snr_db_list", o.snr_db_list, "SNR points in dB")->delimiter(',');
        cmd.add_option("--p", o.p, "transmit power budget in watts");
        cmd.add_option("--kappa", o.kappa, "AO stopping tolerance");
        cmd.add_option("--slots", o.slots, "Monte Carlo slots per SNR point");
        cmd.add_option("--master_seed", o.master_seed, "master seed");
        cmd.add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
    }

    slp::SimConfig resolve(const Overrides &o, const std::string &config_path, const std::optional<std::uint64_t> &seed)
    {
        slp::SimConfig cfg = config_path.empty() ? slp::SimConfig{} : slp::load_config(config_path);
        if (o.N_T) cfg.N_T = *o.N_T;
        if (o.N_R) cfg.N_R = *o.N_R;
        if (o.L) cfg.L = *o.L;
        if (o.K) cfg.K = *o.K;
        if (o.M) cfg.M = *o.M;
        if (o.slots) cfg.slots = *o.slots;
        if (o.order) cfg.order = *o.order;
        if (o.scheme) cfg.scheme = slp::parse_scheme(*o.scheme);
        if (o.detector) cfg.detector = slp::parse_detector(*o.detector);
        if (o.snr_db_list) cfg.snr_db_list = *o.snr_db_list;
        if (o.p) cfg.p = *o.p;
        if (o.kappa) cfg.kappa = *o.kappa;
        if (o.master_seed) cfg.master_seed = *o.master_seed;
        if (seed) cfg.master_seed = *seed;
        if (o.threads) cfg.threads = *o.threads;
        return cfg;
    }

    void emit(const std::string &text, const std::string &out)
    {
        if (out.empty() || out == "-")
            std::cout << text;
        else
            slp::write_text(out, text);
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Symbol-level precoding MU-MIMO link simulator"};
    app.require_subcommand(1);

    Overrides ber_o, conv_o;
    std::string ber_config, conv_config, ber_out, conv_out, ber_format = "csv", conv_format = "csv";
    std::optional<std::uint64_t> ber_seed, conv_seed;
    std::vector<double> p_list{0.5, 1.0, 2.0};

    auto *ber = app.add_subcommand("ber", "BER versus SNR sweep");
    add_config_flags(*ber, ber_o, ber_config, ber_seed);
    ber->add_option("--out", ber_out, "output path (stdout when omitted)");
    ber->add_option("--format", ber_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto *conv = app.add_subcommand("converge", "joint-design convergence traces on one channel realization");
    add_config_flags(*conv, conv_o, conv_config, conv_seed);
    conv->add_option("--p_list", p_list, "power settings in watts")->delimiter(',');
    conv->add_option("--out", conv_out, "output path (stdout when omitted)");
    conv->add_option("--format", conv_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if (*ber)
        {
            const slp::SimConfig cfg = resolve(ber_o, ber_config, ber_seed);
            const auto records = slp::run_ber_sweep(cfg);
            if (ber_format == "json")
                emit(slp::to_json(records).dump(2) + "\n", ber_out);
            else
                emit(slp::to_csv(records), ber_out);
        }
        else
        {
            slp::SimConfig cfg = resolve(conv_o, conv_config, conv_seed);
            if (!conv_o.scheme && conv_config.empty())
                cfg.scheme = slp::Scheme::joint_design;
            if (!conv_o.detector && conv_config.empty())
                cfg.detector = slp::Detector::linear_combiner;
            const auto traces = slp::run_convergence_probe(cfg, p_list);
            if (conv_format == "json")
                emit(slp::traces_to_json(traces).dump(2) + "\n", conv_out);
            else
                emit(slp::traces_to_csv(traces), conv_out);
        }
    }
    catch (const slp::ConfigError &e)
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    catch (const slp::NumericError &e)
    {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    catch (const slp::Error &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
