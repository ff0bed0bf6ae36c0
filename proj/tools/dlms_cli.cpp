// SPDX-License-Identifier: Apache-2.0
//
// dlms-ini: diffusion LMS over fading wireless links with inter-node interference
// Copyright (C) 2026 The dlms-ini authors
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

// Command-line front end: run, theory, compare, topology gen|show.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dlms.hpp"

namespace {

using nlohmann::json;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out;
    std::optional<std::string> equalizer;
};

void add_overrides(CLI::App* app, Overrides& o)
{
    app->add_option("--seed", o.seed, "Master seed");
    app->add_option("--trials", o.trials, "Number of Monte Carlo trials");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--equalizer", o.equalizer, "zf, mmse, none, or a comma list");
}

dlms::ExperimentConfig load(const std::string& path, const Overrides& o)
{
    dlms::ExperimentConfig c = dlms::load_config(path);
    if (o.seed)
        c.seed = *o.seed;
    if (o.trials) {
        if (*o.trials == 0)
            throw dlms::ConfigError("--trials", "must be >= 1");
        c.trials = *o.trials;
    }
    if (o.out)
        c.output_dir = *o.out;
    if (o.equalizer) {
        c.equalizers.clear();
        std::stringstream ss(*o.equalizer);
        std::string tok;
        while (std::getline(ss, tok, ','))
            c.equalizers.push_back(dlms::parse_equalizer(tok));
    }
    c.validate();
    return c;
}

std::vector<dlms::CombinerKind> parse_list(const std::string& s)
{
    std::vector<dlms::CombinerKind> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty())
            out.push_back(dlms::parse_combiner(tok));
    return out;
}

void print_summary(const dlms::ResultBundle& b)
{
    for (const auto& r : b.runs) {
        std::printf("%-18s %-5s", dlms::to_string(r.combiner), dlms::to_string(r.equalizer));
        if (r.sim.node.size() > 0)
            std::printf("  sim %8.3f dB", dlms::linear_to_db(r.sim.network_steady));
        if (r.theory) {
            std::printf("  theory %8.3f dB  rho(B) %.6f", dlms::linear_to_db(r.theory->network_steady),
                        r.theory->spectral_radius);
            if (r.theory->upper_bound)
                std::printf("  bound %8.3f dB", dlms::linear_to_db(*r.theory->upper_bound));
        }
        std::printf("\n");
    }
}

int fail(const char* kind, const std::string& message, const std::string& path = {})
{
    json e = {{"error", kind}, {"message", message}};
    if (!path.empty())
        e["path"] = path;
    std::cerr << e.dump() << std::endl;
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Diffusion LMS over fading wireless links with inter-node interference"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dlms::kVersion);

    Overrides o;
    std::string config_path;
    std::string combiner_list;

    auto* run = app.add_subcommand("run", "Simulate every configured combiner/equalizer pair");
    run->add_option("config", config_path, "Experiment config JSON")->required();
    add_overrides(run, o);

    auto* theory = app.add_subcommand("theory", "Evaluate the analytical MSD recursion only");
    theory->add_option("config", config_path, "Experiment config JSON")->required();
    add_overrides(theory, o);

    auto* compare = app.add_subcommand("compare", "Rank combiners by simulated steady-state MSD");
    compare->add_option("config", config_path, "Experiment config JSON")->required();
    compare->add_option("--combiners", combiner_list, "Comma-separated combiner names")->required();
    add_overrides(compare, o);

    auto* topo = app.add_subcommand("topology", "Generate or inspect a topology document");
    topo->require_subcommand(1);
    std::uint64_t gen_seed = 1;
    std::size_t gen_nodes = 10;
    double gen_range = 0.5, gen_side = 1.0;
    std::string gen_out, show_path;
    auto* gen = topo->add_subcommand("gen", "Place nodes uniformly at random");
    gen->add_option("--seed", gen_seed, "Placement seed");
    gen->add_option("--nodes", gen_nodes, "Node count")->check(CLI::PositiveNumber);
    gen->add_option("--range", gen_range, "Transmission range")->check(CLI::PositiveNumber);
    gen->add_option("--side", gen_side, "Side of the square region")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Write to file instead of stdout");
    auto* show = topo->add_subcommand("show", "Print node degrees and neighbour lists");
    show->add_option("file", show_path, "Topology JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*run) {
            const auto c = load(config_path, o);
            const auto b = dlms::run_experiment(c);
            dlms::emit_outputs(b, c.output_dir);
            print_summary(b);
            std::printf("outputs written to %s\n", c.output_dir.c_str());
        } else if (*theory) {
            const auto c = load(config_path, o);
            const auto b = dlms::run_theory_only(c);
            dlms::emit_outputs(b, c.output_dir);
            print_summary(b);
            for (std::size_t k = 0; k < c.node_count(); ++k) {
                const auto& s = c.nodes[k];
                const auto ideal = dlms::step_size_interval(s.regressor_cov, 1.0);
                std::printf("node %zu step size interval (ideal links): (%.6g, %.6g)\n", k + 1, ideal.low,
                            ideal.high);
            }
            std::printf("outputs written to %s\n", c.output_dir.c_str());
        } else if (*compare) {
            const auto c = load(config_path, o);
            auto cc = c;
            cc.combiners = parse_list(combiner_list);
            if (cc.combiners.size() < 2)
                throw dlms::ConfigError("--combiners", "compare needs at least two combiners");
            const auto b = dlms::run_experiment(cc);
            dlms::emit_outputs(b, cc.output_dir);
            std::printf("%-5s %-18s %12s %12s\n", "eq", "combiner", "msd_db", "stderr_lin");
            for (const auto& row : dlms::rank_combiners(b))
                std::printf("%-5s %-18s %12.4f %12.4g\n", dlms::to_string(row.equalizer),
                            dlms::to_string(row.combiner), row.network_db, row.stderr_linear);
        } else if (*gen) {
            const auto t = dlms::generate_topology(gen_seed, gen_nodes, gen_range, gen_side);
            const std::string doc = dlms::topology_to_json(t).dump(2) + "\n";
            if (gen_out.empty())
                std::cout << doc;
            else
                dlms::detail::write_atomic(gen_out, doc);
        } else if (*show) {
            const auto t = dlms::load_topology(json::parse(dlms::detail::read_file(show_path)));
            json nodes = json::array();
            for (std::size_t k = 0; k < t.node_count(); ++k) {
                std::vector<std::size_t> nb;
                for (auto l : t.neighbors(k))
                    if (l != k)
                        nb.push_back(l);
                nodes.push_back({{"id", k}, {"x", t.positions()[k].x}, {"y", t.positions()[k].y},
                                 {"degree", t.neighbors(k).size()}, {"neighbors", nb}});
            }
            std::cout << json({{"node_count", t.node_count()}, {"r_o", t.tx_range()},
                               {"max_degree", t.max_degree()}, {"nodes", nodes}})
                             .dump(2)
                      << "\n";
        }
    } catch (const dlms::ConfigError& e) {
        return fail("config", e.what(), e.path());
    } catch (const nlohmann::json::exception& e) {
        return fail("config", e.what());
    } catch (const dlms::ContractError& e) {
        return fail("contract", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
