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

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slp;
using Catch::Matchers::WithinAbs;

namespace
{
    SimConfig small_config(Scheme scheme, Detector detector)
    {
        SimConfig cfg;
        cfg.N_T = 8;
        cfg.N_R = 4;
        cfg.L = 2;
        cfg.K = 2;
        cfg.scheme = scheme;
        cfg.detector = detector;
        cfg.snr_db_list = {0, 10, 20, 30};
        cfg.slots = 200;
        cfg.threads = 1;
        return cfg;
    }

    std::string strip_wall_time(const std::string &csv)
    {
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line))
            out += line.substr(0, line.rfind(',')) + '\n';
        return out;
    }

    std::filesystem::path temp_path(const std::string &name)
    {
        return std::filesystem::temp_directory_path() / ("slp_test_sim_" + name);
    }
} // namespace

TEST_CASE("sim - configuration validation")
{
    SimConfig cfg = small_config(Scheme::ssvmp, Detector::linear_combiner);
    CHECK_THROWS_AS(run_ber_sweep(cfg), ConfigError);
    cfg = small_config(Scheme::ssvmp, Detector::mld);
    cfg.L = 5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config(Scheme::ssvmp, Detector::mld);
    cfg.N_T = 3;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config(Scheme::ssvmp, Detector::mld);
    cfg.order = 32;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config(Scheme::ssvmp, Detector::mld);
    cfg.order = 64;
    cfg.L = 4;
    cfg.N_R = 4;
    CHECK_THROWS_AS(validate(cfg), ConfigError); // 64^4 candidates
    cfg.detector = Detector::qrm_mld;
    CHECK_NOTHROW(validate(cfg));
    cfg = small_config(Scheme::bd, Detector::mld);
    cfg.N_T = 5;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config(Scheme::ssvmp, Detector::mld);
    cfg.snr_db_list.clear();
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config(Scheme::traditional_slp, Detector::mld);
    CHECK_NOTHROW(validate(cfg));
    CHECK_THROWS_AS(parse_scheme("zf"), ConfigError);
    CHECK(parse_detector("qrm_mld") == Detector::qrm_mld);
}

TEST_CASE("sim - record invariants and noiseless block diagonalization")
{
    SimConfig cfg = small_config(Scheme::bd, Detector::mld);
    cfg.snr_db_list = {60};
    cfg.slots = 100;
    const std::vector<BerRecord> recs = run_ber_sweep(cfg);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].bit_errors == 0);
    CHECK(recs[0].bits_total == 100u * 2u * 2u * 4u);
    CHECK(recs[0].ber == 0.0);
    CHECK(recs[0].scheme == "bd");
    CHECK(recs[0].seed == cfg.master_seed);
}

TEST_CASE("sim - BER falls with SNR for every scheme")
{
    const std::pair<Scheme, Detector> combos[] = {{Scheme::ssvmp, Detector::mld},     {Scheme::sdp, Detector::qr_mld},
                                                  {Scheme::bd, Detector::qrm_mld},    {Scheme::joint_design, Detector::linear_combiner},
                                                  {Scheme::ssvmp, Detector::qrm_mld}, {Scheme::joint_design, Detector::mld}};
    for (auto [scheme, detector] : combos)
    {
        SimConfig cfg = small_config(scheme, detector);
        const std::vector<BerRecord> recs = run_ber_sweep(cfg);
        REQUIRE(recs.size() == 4);
        int inversions = 0;
        for (std::size_t i = 0; i < recs.size(); ++i)
        {
            CHECK(recs[i].ber == static_cast<double>(recs[i].bit_errors) / static_cast<double>(recs[i].bits_total));
            CHECK(recs[i].snr_db == cfg.snr_db_list[i]);
            if (i == 0)
                continue;
            const double a = recs[i - 1].ber, b = recs[i].ber;
            const double se = std::sqrt((a * (1 - a) + b * (1 - b)) / static_cast<double>(recs[i].bits_total));
            if (b > a)
            {
                ++inversions;
                CHECK(b - a < 3.0 * se);
            }
        }
        CHECK(inversions <= 1);
        CHECK(recs.back().ber < recs.front().ber);
    }
}

TEST_CASE("sim - closed-form SLP with MLD fails")
{
    SimConfig cfg = small_config(Scheme::traditional_slp, Detector::mld);
    for (const BerRecord &r : run_ber_sweep(cfg))
        CHECK(r.ber > 0.1);
}

TEST_CASE("sim - results do not depend on the worker count")
{
    SimConfig cfg = small_config(Scheme::ssvmp, Detector::qrm_mld);
    cfg.slots = 60;
    cfg.threads = 1;
    const std::string one = strip_wall_time(to_csv(run_ber_sweep(cfg)));
    cfg.threads = 3;
    const std::string three = strip_wall_time(to_csv(run_ber_sweep(cfg)));
    CHECK(one == three);
    CHECK(one == strip_wall_time(to_csv(run_ber_sweep(cfg))));
    cfg.master_seed = 2;
    CHECK(one != strip_wall_time(to_csv(run_ber_sweep(cfg))));
}

TEST_CASE("sim - CSV and JSON export")
{
    CHECK(to_csv({}) == std::string(csv_header) + "\n");

    BerRecord r{"ssvmp", "mld", 12.5, 10, 3, 320, 3.0 / 320.0, 7, 1.25};
    const std::string csv = to_csv({r});
    CHECK(csv == std::string(csv_header) + "\nssvmp,mld,12.5,10,3,320,0.009375,7,1.250\n");
    // The ber column is recomputable from the row.
    std::istringstream row(csv.substr(csv.find('\n') + 1));
    std::vector<std::string> fields;
    for (std::string f; std::getline(row, f, ',');)
        fields.push_back(f);
    REQUIRE(fields.size() == 9);
    CHECK(std::stod(fields[6]) == std::stod(fields[4]) / std::stod(fields[5]));

    const std::vector<BerRecord> recs{r, BerRecord{"bd", "qrm_mld", -3.0, 1, 0, 32, 0.0, 1, 0.1}};
    const auto json_path = temp_path("roundtrip.json");
    export_results(recs, json_path.string(), "json");
    CHECK(load_results_json(json_path.string()) == recs);
    const auto csv_path = temp_path("out.csv");
    export_results(recs, csv_path.string(), "csv");
    std::ifstream in(csv_path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == to_csv(recs));
    std::filesystem::remove(json_path);
    std::filesystem::remove(csv_path);

    CHECK_THROWS_AS(export_results(recs, "/nonexistent-dir/x.csv", "csv"), IoError);
    CHECK_THROWS_AS(export_results(recs, csv_path.string(), "xml"), ConfigError);
    try
    {
        export_results(recs, "/nonexistent-dir/x.csv", "csv");
    }
    catch (const IoError &e)
    {
        CHECK(e.path() == "/nonexistent-dir/x.csv");
    }
}

TEST_CASE("sim - configuration files")
{
    SimConfig cfg;
    apply_json(cfg, nlohmann::json{{"N_T", 32}, {"scheme", "bd"}, {"snr_db_list", {5, 15}}, {"master_seed", 99}});
    CHECK(cfg.N_T == 32);
    CHECK(cfg.scheme == Scheme::bd);
    CHECK(cfg.snr_db_list == std::vector<double>{5, 15});
    CHECK(cfg.master_seed == 99u);

    SimConfig back;
    apply_json(back, config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));

    CHECK_THROWS_AS(apply_json(cfg, nlohmann::json{{"N_X", 1}}), ConfigError);
    CHECK_THROWS_AS(apply_json(cfg, nlohmann::json{{"N_T", "many"}}), ConfigError);
    CHECK_THROWS_AS(apply_json(cfg, nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent-dir/cfg.json"), ConfigError);

    const auto path = temp_path("cfg.json");
    {
        std::ofstream f(path);
        f << R"({"K": 3, "detector": "qr_mld"})";
    }
    const SimConfig loaded = load_config(path.string());
    CHECK(loaded.K == 3);
    CHECK(loaded.detector == Detector::qr_mld);
    {
        std::ofstream f(path);
        f << "{not json";
    }
    CHECK_THROWS_AS(load_config(path.string()), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("sim - convergence probe")
{
    SimConfig cfg;
    cfg.scheme = Scheme::joint_design;
    cfg.detector = Detector::linear_combiner;
    const std::vector<ConvergenceTrace> traces = run_convergence_probe(cfg, {0.5, 1.0, 2.0});
    REQUIRE(traces.size() == 3);
    double prev_final = 0.0;
    for (const ConvergenceTrace &tr : traces)
    {
        REQUIRE(!tr.t.empty());
        CHECK(tr.t.size() <= 20);
        for (std::size_t i = 1; i < tr.t.size(); ++i)
            CHECK(tr.t[i] >= tr.t[i - 1] - 1e-9);
        for (double d : tr.deltas)
            CHECK(d >= 0.0);
        CHECK(tr.deltas.back() <= cfg.kappa);
        CHECK(tr.t.back() > prev_final);
        prev_final = tr.t.back();
    }
    CHECK(traces_to_csv(traces).rfind("p,iteration,t,delta\n", 0) == 0);
    CHECK(traces_to_json(traces).size() == 3);

    cfg.scheme = Scheme::ssvmp;
    cfg.detector = Detector::mld;
    CHECK_THROWS_AS(run_convergence_probe(cfg, {1.0}), ConfigError);
}
