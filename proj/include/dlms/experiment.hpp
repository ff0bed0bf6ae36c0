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

#ifndef DLMS_EXPERIMENT_HPP
#define DLMS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "combination.hpp"
#include "dlms_engine.hpp"
#include "network_model.hpp"
#include "node_stats.hpp"
#include "performance_theory.hpp"
#include "types.hpp"
#include "wireless_channel.hpp"

namespace dlms {

inline constexpr const char* kVersion = "0.1.0";

// Stream families derived from the master seed.
inline constexpr std::uint64_t kTrialTag = 0x7472;
inline constexpr std::uint64_t kMomentTag = 0x6d6f;
inline constexpr std::uint64_t kTheoryTag = 0x7468;

struct ExperimentConfig {
    NetworkTopology topology;
    ChannelParams channel;
    std::vector<NodeStats> nodes;
    CVec truth;
    std::size_t horizon = 2000;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::vector<CombinerKind> combiners{CombinerKind::optimal};
    std::vector<Equalizer> equalizers{Equalizer::zf};
    bool theory = true;
    std::size_t moment_samples = 100000;
    std::size_t steady_window = 0; ///< 0 selects the final 20% of the horizon
    double tau = 0.1;
    double alpha_init = 1.0;
    std::optional<double> bound_constant;
    std::size_t threads = 0; ///< 0 = hardware concurrency
    std::string output_dir = "out";
    nlohmann::json source; ///< the document this config was parsed from

    std::size_t node_count() const { return topology.node_count(); }
    Eigen::Index dim() const { return truth.size(); }
    std::size_t window() const
    {
        return steady_window > 0 ? steady_window : std::max<std::size_t>(1, horizon / 5);
    }

    void validate() const
    {
        if (horizon < 1)
            throw ConfigError("horizon", "must be >= 1");
        if (trials < 1)
            throw ConfigError("trials", "must be >= 1");
        if (window() > horizon)
            throw ConfigError("steady_window", "must not exceed horizon");
        if (combiners.empty())
            throw ConfigError("combiners", "at least one combiner required");
        if (equalizers.empty())
            throw ConfigError("equalizers", "at least one equalizer required");
        if (moment_samples < 1)
            throw ConfigError("moment_samples", "must be >= 1");
        if (!(tau > 0.0 && tau < 1.0))
            throw ConfigError("adaptive.tau", "must lie in (0, 1)");
        if (!(alpha_init > 0.0))
            throw ConfigError("adaptive.init", "must be positive");
        if (bound_constant && !(*bound_constant > 0.0))
            throw ConfigError("bound_constant", "must be positive");
        if (nodes.size() != node_count())
            throw ConfigError("nodes", "expected one entry per node");
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (nodes[k].dim() != dim())
                throw ConfigError("nodes.regressor_cov", "dimension must match truth length");
    }
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline double number_at(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number())
        throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline cplx complex_at(const nlohmann::json& j, const std::string& path)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(path, "expected a number or [re, im]");
}

inline std::size_t count_at(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ConfigError(path, "expected a non-negative integer");
    return static_cast<std::size_t>(j.get<long long>());
}

/// Scalar broadcast or full K x K matrix.
inline RMat link_matrix(const nlohmann::json& j, std::size_t K, const std::string& path)
{
    const auto n = static_cast<Eigen::Index>(K);
    if (j.is_number())
        return RMat::Constant(n, n, j.get<double>());
    if (!j.is_array() || j.size() != K)
        throw ConfigError(path, "expected a scalar or a K x K matrix");
    RMat m(n, n);
    for (std::size_t r = 0; r < K; ++r) {
        const std::string pr = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != K)
            throw ConfigError(pr, "expected a row of length K");
        for (std::size_t c = 0; c < K; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number_at(j[r][c], pr + "[" + std::to_string(c) + "]");
    }
    return m;
}

inline std::vector<double> per_node(const nlohmann::json& j, std::size_t K, const std::string& path)
{
    if (j.is_number())
        return std::vector<double>(K, j.get<double>());
    if (!j.is_array() || j.size() != K)
        throw ConfigError(path, "expected a scalar or an array of length K");
    std::vector<double> v(K);
    for (std::size_t k = 0; k < K; ++k)
        v[k] = number_at(j[k], path + "[" + std::to_string(k) + "]");
    return v;
}

inline CMat square_matrix(const nlohmann::json& j, Eigen::Index M, const std::string& path)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != M)
        throw ConfigError(path, "expected an M x M matrix");
    CMat m(M, M);
    for (Eigen::Index r = 0; r < M; ++r) {
        const std::string pr = path + "[" + std::to_string(r) + "]";
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != M)
            throw ConfigError(pr, "expected a row of length M");
        for (Eigen::Index c = 0; c < M; ++c)
            m(r, c) = complex_at(row[static_cast<std::size_t>(c)], pr + "[" + std::to_string(c) + "]");
    }
    return m;
}

/// Scalar s (s I_M), per-node scalars, one shared M x M matrix, or K matrices.
inline std::vector<CMat> regressor_covs(const nlohmann::json& j, std::size_t K, Eigen::Index M, const std::string& path)
{
    if (j.is_number())
        return std::vector<CMat>(K, CMat::Identity(M, M) * j.get<double>());
    if (!j.is_array() || j.empty())
        throw ConfigError(path, "expected a scalar, K scalars, an M x M matrix or K matrices");
    if (j[0].is_number() && j.size() == K) {
        std::vector<CMat> out;
        for (std::size_t k = 0; k < K; ++k)
            out.push_back(CMat::Identity(M, M) * number_at(j[k], path + "[" + std::to_string(k) + "]"));
        return out;
    }
    // K matrices when the second level holds rows rather than entries. With
    // K = M = 2 a row of two reals looks like an [re, im] pair; K matrices wins.
    const bool second_is_row = j[0].is_array() && !j[0].empty() && j[0][0].is_array() &&
                               j[0][0].size() == static_cast<std::size_t>(M);
    if (j.size() == K && second_is_row) {
        std::vector<CMat> out;
        for (std::size_t k = 0; k < K; ++k)
            out.push_back(square_matrix(j[k], M, path + "[" + std::to_string(k) + "]"));
        return out;
    }
    return std::vector<CMat>(K, square_matrix(j, M, path));
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw ConfigError(p.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

inline std::vector<cplx> reference_truth() { return {{1.0, 1.0}, {-0.5, -0.5}}; }

/// Parses an experiment document. Relative topology file paths resolve
/// against `base_dir`.
inline ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".")
{
    using namespace detail;
    if (!doc.is_object())
        throw ConfigError("", "config must be a JSON object");
    ExperimentConfig c;
    c.source = doc;

    // truth first: it fixes M
    std::vector<cplx> truth = reference_truth();
    if (doc.contains("truth")) {
        const auto& t = doc["truth"];
        if (!t.is_array() || t.empty())
            throw ConfigError("truth", "expected a non-empty array");
        truth.clear();
        for (std::size_t i = 0; i < t.size(); ++i)
            truth.push_back(complex_at(t[i], "truth[" + std::to_string(i) + "]"));
    }
    c.truth = Eigen::Map<const CVec>(truth.data(), static_cast<Eigen::Index>(truth.size()));
    const Eigen::Index M = c.truth.size();

    // topology
    if (!doc.contains("topology"))
        throw ConfigError("topology", "missing");
    const auto& tj = doc["topology"];
    if (!tj.is_object())
        throw ConfigError("topology", "expected an object");
    if (tj.contains("generate")) {
        const auto& g = tj["generate"];
        if (!g.is_object())
            throw ConfigError("topology.generate", "expected an object");
        const std::uint64_t seed = g.contains("seed") ? count_at(g["seed"], "topology.generate.seed") : 1;
        if (!g.contains("node_count"))
            throw ConfigError("topology.generate.node_count", "missing");
        const std::size_t K = count_at(g["node_count"], "topology.generate.node_count");
        if (K == 0)
            throw ConfigError("topology.generate.node_count", "must be >= 1");
        if (!g.contains("tx_range"))
            throw ConfigError("topology.generate.tx_range", "missing");
        const double r = number_at(g["tx_range"], "topology.generate.tx_range");
        if (!(r > 0.0))
            throw ConfigError("topology.generate.tx_range", "must be positive");
        const double side = g.contains("region_side") ? number_at(g["region_side"], "topology.generate.region_side") : 1.0;
        if (!(side > 0.0))
            throw ConfigError("topology.generate.region_side", "must be positive");
        c.topology = generate_topology(seed, K, r, side);
    } else if (tj.contains("file")) {
        if (!tj["file"].is_string())
            throw ConfigError("topology.file", "expected a path string");
        std::filesystem::path p = tj["file"].get<std::string>();
        if (p.is_relative())
            p = base_dir / p;
        nlohmann::json td;
        try {
            td = nlohmann::json::parse(read_file(p));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("topology.file", std::string("malformed JSON: ") + e.what());
        }
        c.topology = load_topology(td, "topology.file");
    } else {
        c.topology = load_topology(tj, "topology");
    }
    const std::size_t K = c.topology.node_count();

    // channel
    if (!doc.contains("channel") || !doc["channel"].is_object())
        throw ConfigError("channel", "missing or not an object");
    const auto& ch = doc["channel"];
    c.channel.tx_power = ch.contains("tx_power") ? number_at(ch["tx_power"], "channel.tx_power") : 1.0;
    if (!(c.channel.tx_power > 0.0))
        throw ConfigError("channel.tx_power", "must be positive");
    if (!ch.contains("pathloss_exp"))
        throw ConfigError("channel.pathloss_exp", "missing");
    c.channel.pathloss_exp = number_at(ch["pathloss_exp"], "channel.pathloss_exp");
    if (!(c.channel.pathloss_exp > 0.0))
        throw ConfigError("channel.pathloss_exp", "must be positive");
    c.channel.fading_var =
        ch.contains("fading_var") ? link_matrix(ch["fading_var"], K, "channel.fading_var") : RMat::Ones(K, K);
    c.channel.chan_noise_var = ch.contains("chan_noise_var")
                                   ? link_matrix(ch["chan_noise_var"], K, "channel.chan_noise_var")
                                   : RMat::Zero(K, K);
    if ((c.channel.fading_var.array() < 0.0).any())
        throw ConfigError("channel.fading_var", "variances must be >= 0");
    if ((c.channel.chan_noise_var.array() < 0.0).any())
        throw ConfigError("channel.chan_noise_var", "variances must be >= 0");
    if (ch.contains("sinr_threshold_db") && ch.contains("sinr_threshold"))
        throw ConfigError("channel", "give sinr_threshold_db or sinr_threshold, not both");
    if (ch.contains("sinr_threshold_db"))
        c.channel.sinr_threshold = db_to_linear(number_at(ch["sinr_threshold_db"], "channel.sinr_threshold_db"));
    else if (ch.contains("sinr_threshold"))
        c.channel.sinr_threshold = number_at(ch["sinr_threshold"], "channel.sinr_threshold");
    else
        c.channel.sinr_threshold = db_to_linear(-10.0);
    if (!(c.channel.sinr_threshold >= 0.0))
        throw ConfigError("channel.sinr_threshold", "must be >= 0");

    // node statistics
    const nlohmann::json nj = doc.contains("nodes") ? doc["nodes"] : nlohmann::json::object();
    if (!nj.is_object())
        throw ConfigError("nodes", "expected an object");
    const auto mu = nj.contains("step_size") ? per_node(nj["step_size"], K, "nodes.step_size")
                                             : std::vector<double>(K, 0.01);
    const auto sv = nj.contains("meas_noise_var") ? per_node(nj["meas_noise_var"], K, "nodes.meas_noise_var")
                                                  : std::vector<double>(K, 0.1);
    const auto ru = nj.contains("regressor_cov") ? regressor_covs(nj["regressor_cov"], K, M, "nodes.regressor_cov")
                                                 : std::vector<CMat>(K, CMat::Identity(M, M));
    for (std::size_t k = 0; k < K; ++k) {
        NodeStats s;
        s.step_size = mu[k];
        s.meas_noise_var = sv[k];
        s.regressor_cov = ru[k];
        try {
            s.validate();
        } catch (const ContractError& e) {
            throw ConfigError("nodes[" + std::to_string(k) + "]", e.what());
        }
        c.nodes.push_back(std::move(s));
    }

    if (doc.contains("horizon"))
        c.horizon = count_at(doc["horizon"], "horizon");
    if (doc.contains("trials"))
        c.trials = count_at(doc["trials"], "trials");
    if (doc.contains("seed"))
        c.seed = count_at(doc["seed"], "seed");
    if (doc.contains("combiners")) {
        const auto& cj = doc["combiners"];
        if (!cj.is_array())
            throw ConfigError("combiners", "expected an array of names");
        c.combiners.clear();
        for (std::size_t i = 0; i < cj.size(); ++i) {
            if (!cj[i].is_string())
                throw ConfigError("combiners[" + std::to_string(i) + "]", "expected a string");
            try {
                c.combiners.push_back(parse_combiner(cj[i].get<std::string>()));
            } catch (const ConfigError& e) {
                throw ConfigError("combiners[" + std::to_string(i) + "]", e.what());
            }
        }
    }
    if (doc.contains("combiner")) {
        if (!doc["combiner"].is_string())
            throw ConfigError("combiner", "expected a string");
        c.combiners = {parse_combiner(doc["combiner"].get<std::string>())};
    }
    if (doc.contains("equalizers") || doc.contains("equalizer")) {
        const std::string key = doc.contains("equalizers") ? "equalizers" : "equalizer";
        const auto& ej = doc[key];
        c.equalizers.clear();
        const auto add = [&](const nlohmann::json& e, const std::string& p) {
            if (!e.is_string())
                throw ConfigError(p, "expected a string");
            try {
                c.equalizers.push_back(parse_equalizer(e.get<std::string>()));
            } catch (const ConfigError& err) {
                throw ConfigError(p, err.what());
            }
        };
        if (ej.is_array())
            for (std::size_t i = 0; i < ej.size(); ++i)
                add(ej[i], key + "[" + std::to_string(i) + "]");
        else
            add(ej, key);
    }
    if (doc.contains("theory")) {
        if (!doc["theory"].is_boolean())
            throw ConfigError("theory", "expected true or false");
        c.theory = doc["theory"].get<bool>();
    }
    if (doc.contains("moment_samples"))
        c.moment_samples = count_at(doc["moment_samples"], "moment_samples");
    if (doc.contains("steady_window"))
        c.steady_window = count_at(doc["steady_window"], "steady_window");
    if (doc.contains("adaptive")) {
        const auto& a = doc["adaptive"];
        if (!a.is_object())
            throw ConfigError("adaptive", "expected an object");
        if (a.contains("tau"))
            c.tau = number_at(a["tau"], "adaptive.tau");
        if (a.contains("init"))
            c.alpha_init = number_at(a["init"], "adaptive.init");
    }
    if (doc.contains("bound_constant") && !doc["bound_constant"].is_null())
        c.bound_constant = number_at(doc["bound_constant"], "bound_constant");
    if (doc.contains("threads"))
        c.threads = count_at(doc["threads"], "threads");
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string())
            throw ConfigError("output_dir", "expected a string");
        c.output_dir = doc["output_dir"].get<std::string>();
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path());
}

/// Stable hash of the parsed document plus the overrides that change results.
inline std::string config_hash(const ExperimentConfig& c)
{
    nlohmann::json j = c.source;
    j["__effective"] = {{"seed", c.seed},
                        {"trials", c.trials},
                        {"horizon", c.horizon},
                        {"steady_window", c.window()},
                        {"topology", topology_to_json(c.topology)}};
    std::vector<std::string> comb, eq;
    for (auto x : c.combiners)
        comb.emplace_back(to_string(x));
    for (auto x : c.equalizers)
        eq.emplace_back(to_string(x));
    j["__effective"]["combiners"] = comb;
    j["__effective"]["equalizers"] = eq;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(j.dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Theory-side artefacts for one (combiner, equalizer) pair.
struct TheoryResult {
    TheoryTrace trace;
    RVec node_steady;
    double network_steady = 0.0;
    double spectral_radius = 0.0;
    std::optional<double> upper_bound;
    std::optional<CVec> mean_error_limit;
    double q_norm = 0.0;
};

/// Everything produced for one (combiner, equalizer) pair.
struct RunResult {
    CombinerKind combiner = CombinerKind::optimal;
    Equalizer equalizer = Equalizer::zf;
    MsdTraces sim;
    double network_steady_stderr = 0.0;
    CMat mean_tail_error;             ///< M x K, trial and tail-window average of w^o - w_k,i
    double max_stochasticity_error = 0.0;
    std::optional<TheoryResult> theory;
};

struct ResultBundle {
    std::vector<RunResult> runs;
    std::size_t node_count = 0;
    std::size_t horizon = 0;
    std::size_t window = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    nlohmann::json topology;
};

/// Closed-form alpha^2 table for a given equalizer (shared by the optimal and
/// adaptive rules, and used as the theory target of the adaptive rule).
inline RMat alpha_table_for(const ExperimentConfig& c, const ChannelModel& ch, Equalizer eq)
{
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(eq), kMomentTag));
    const LinkMomentTable lm =
        estimate_link_moments(ch, eq, uniform_nominal_weights(c.topology), c.moment_samples, rng);
    return optimal_alpha_table(c.topology, c.nodes, lm);
}

inline TheoryResult run_theory(const ExperimentConfig& c, const ChannelModel& ch, Equalizer eq,
                               const Combiner& comb)
{
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(eq) * 16 + static_cast<std::uint64_t>(comb.kind()),
                        kTheoryTag));
    const WeightRule rule = [&comb](std::size_t k, std::span<const std::size_t> active) {
        return comb.static_column(k, active);
    };
    const WeightMoments wm = estimate_weight_moments(ch, eq, rule, c.moment_samples, rng);
    const MomentMatrices mm = assemble_moments(ch, c.nodes, wm);
    const CVec wc = stack_truth(c.truth, mm.K);
    TheoryResult t;
    t.trace = msd_trace(mm, wc, c.horizon);
    const auto W = static_cast<Eigen::Index>(c.window());
    t.node_steady = t.trace.node.rightCols(W).rowwise().mean();
    t.network_steady = t.trace.network.tail(W).mean();
    t.spectral_radius = t.trace.spectral_radius;
    t.q_norm = block_max_norm(CMat(mm.Q.transpose()), mm.M);
    const double delta = adaptation_norm(mm);
    if (delta < 1.0)
        t.upper_bound = msd_upper_bound(mm, c.bound_constant.value_or(static_cast<double>(mm.M * mm.K)), delta);
    if (auto lim = mean_error_limit(mm, wc))
        t.mean_error_limit = lim->value;
    return t;
}

/// Simulates `trials` independent runs for one pair. Trial t uses the stream
/// derive_seed(seed, t), so every pair sees the same channel and data draws.
inline RunResult run_pair(const ExperimentConfig& c, const ChannelModel& ch, CombinerKind kind, Equalizer eq,
                          const RMat& alpha_sq)
{
    RunResult r;
    r.combiner = kind;
    r.equalizer = eq;
    const Combiner proto(kind, c.topology, c.nodes, alpha_sq, c.tau, c.alpha_init);
    const GroundTruth truth{c.truth};

    std::vector<TrialResult> results(c.trials);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    const auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= c.trials)
                return;
            try {
                DiffusionNetwork net(ch, c.nodes, truth, eq, proto);
                Rng rng(derive_seed(c.seed, t, kTrialTag));
                results[t] = run_trial(net, c.horizon, c.window(), rng);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err)
                    err = std::current_exception();
                next.store(c.trials);
            }
        }
    };
    std::size_t nthreads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, c.trials);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < nthreads; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (err)
        std::rethrow_exception(err);

    std::vector<RMat> sq;
    sq.reserve(c.trials);
    r.mean_tail_error = CMat::Zero(c.dim(), static_cast<Eigen::Index>(c.node_count()));
    for (auto& tr : results) {
        sq.push_back(std::move(tr.sq_error));
        r.mean_tail_error += tr.tail_mean_error;
        r.max_stochasticity_error = std::max(r.max_stochasticity_error, tr.max_stochasticity_error);
    }
    r.mean_tail_error /= static_cast<double>(c.trials);
    r.sim = measure_msd(sq, c.window());
    const RVec& per = r.sim.network_steady_per_trial;
    if (per.size() > 1) {
        const double mean = per.mean();
        const double var = (per.array() - mean).square().sum() / static_cast<double>(per.size() - 1);
        r.network_steady_stderr = std::sqrt(var / static_cast<double>(per.size()));
    }
    return r;
}

/// Runs every configured (combiner, equalizer) pair. Deterministic in
/// (config, seed) regardless of the thread count.
inline ResultBundle run_experiment(const ExperimentConfig& c)
{
    c.validate();
    ResultBundle b;
    b.node_count = c.node_count();
    b.horizon = c.horizon;
    b.window = c.window();
    b.trials = c.trials;
    b.seed = c.seed;
    b.config_hash = config_hash(c);
    b.topology = topology_to_json(c.topology);
    const ChannelModel ch(c.channel, c.topology);
    for (Equalizer eq : c.equalizers) {
        const bool needs_alpha = c.theory || std::any_of(c.combiners.begin(), c.combiners.end(), [](CombinerKind k) {
                                     return k == CombinerKind::optimal || k == CombinerKind::adaptive;
                                 });
        const RMat alpha = needs_alpha ? alpha_table_for(c, ch, eq) : RMat{};
        for (CombinerKind kind : c.combiners) {
            RunResult r = run_pair(c, ch, kind, eq, alpha);
            if (c.theory)
                r.theory = run_theory(c, ch, eq, Combiner(kind, c.topology, c.nodes, alpha, c.tau, c.alpha_init));
            b.runs.push_back(std::move(r));
        }
    }
    return b;
}

/// Theory-only evaluation (no simulation) for every configured pair.
inline ResultBundle run_theory_only(const ExperimentConfig& c)
{
    c.validate();
    ResultBundle b;
    b.node_count = c.node_count();
    b.horizon = c.horizon;
    b.window = c.window();
    b.trials = 0;
    b.seed = c.seed;
    b.config_hash = config_hash(c);
    b.topology = topology_to_json(c.topology);
    const ChannelModel ch(c.channel, c.topology);
    for (Equalizer eq : c.equalizers) {
        const RMat alpha = alpha_table_for(c, ch, eq);
        for (CombinerKind kind : c.combiners) {
            RunResult r;
            r.combiner = kind;
            r.equalizer = eq;
            r.theory = run_theory(c, ch, eq, Combiner(kind, c.topology, c.nodes, alpha, c.tau, c.alpha_init));
            b.runs.push_back(std::move(r));
        }
    }
    return b;
}

struct RankRow {
    CombinerKind combiner;
    Equalizer equalizer;
    double network_db;
    double stderr_linear;
    std::vector<double> node_db;
};

/// Steady-state network MSD per pair, ascending in dB within each equalizer.
inline std::vector<RankRow> rank_combiners(const ResultBundle& b)
{
    std::vector<RankRow> rows;
    for (const auto& r : b.runs) {
        if (r.sim.node.size() == 0)
            continue;
        RankRow row{r.combiner, r.equalizer, linear_to_db(r.sim.network_steady), r.network_steady_stderr, {}};
        for (Eigen::Index k = 0; k < r.sim.node_steady.size(); ++k)
            row.node_db.push_back(linear_to_db(r.sim.node_steady[k]));
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const RankRow& a, const RankRow& b) {
        if (a.equalizer != b.equalizer)
            return static_cast<int>(a.equalizer) < static_cast<int>(b.equalizer);
        return a.network_db < b.network_db;
    });
    return rows;
}

inline std::vector<RankRow> compare_combiners(ExperimentConfig c, const std::vector<CombinerKind>& combiners)
{
    if (combiners.size() < 2)
        throw ConfigError("combiners", "compare needs at least two combiners");
    c.combiners = combiners;
    return rank_combiners(run_experiment(c));
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

struct TraceRow {
    std::string combiner;
    std::string equalizer;
    std::string source;
    std::size_t iteration = 0;
    std::size_t node = 0; ///< 0 = network average, 1..K nodes
    double msd_linear = 0.0;
    double msd_db = 0.0;
};

inline constexpr const char* kTraceHeader = "combiner,equalizer,source,iteration,node,msd_linear,msd_db";
inline constexpr const char* kSteadyHeader = "combiner,equalizer,source,node,msd_linear,msd_db";

namespace detail {

inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void append_row(std::string& out, const std::string& comb, const std::string& eq, const char* src,
                       std::optional<std::size_t> iter, std::size_t node, double lin)
{
    out += comb;
    out += ',';
    out += eq;
    out += ',';
    out += src;
    out += ',';
    if (iter) {
        out += std::to_string(*iter);
        out += ',';
    }
    out += std::to_string(node);
    out += ',';
    out += fmt_double(lin);
    out += ',';
    out += fmt_double(linear_to_db(lin));
    out += '\n';
}

/// Write to a temporary sibling, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots learning curves and steady-state MSD from trace.csv / steady_state.csv."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
out = sys.argv[1] if len(sys.argv) > 1 else here

curves = defaultdict(lambda: ([], []))
with open(os.path.join(here, "trace.csv")) as f:
    for row in csv.DictReader(f):
        if row["node"] != "0":
            continue
        key = (row["equalizer"], row["combiner"], row["source"])
        curves[key][0].append(int(row["iteration"]))
        curves[key][1].append(float(row["msd_db"]))

steady = defaultdict(lambda: ([], []))
with open(os.path.join(here, "steady_state.csv")) as f:
    for row in csv.DictReader(f):
        if row["node"] == "0":
            continue
        key = (row["equalizer"], row["combiner"], row["source"])
        steady[key][0].append(int(row["node"]))
        steady[key][1].append(float(row["msd_db"]))

for eq in sorted({k[0] for k in curves}):
    fig, ax = plt.subplots(figsize=(6, 4))
    for (e, comb, src), (x, y) in sorted(curves.items()):
        if e != eq:
            continue
        ax.plot(x, y, "--" if src == "theory" else "-", label=f"{comb} ({src})")
    ax.set_xlabel("iteration i")
    ax.set_ylabel("network MSD (dB)")
    ax.set_title(f"Network MSD, {eq.upper()} equalizer")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(out, f"msd_vs_iteration_{eq}.png"), dpi=150)

for eq in sorted({k[0] for k in steady}):
    fig, ax = plt.subplots(figsize=(6, 4))
    for (e, comb, src), (x, y) in sorted(steady.items()):
        if e != eq:
            continue
        ax.plot(x, y, "s--" if src == "theory" else "o-", label=f"{comb} ({src})")
    ax.set_xlabel("node index k")
    ax.set_ylabel("steady-state MSD (dB)")
    ax.set_title(f"Steady-state MSD per node, {eq.upper()} equalizer")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(out, f"steady_state_msd_{eq}.png"), dpi=150)
)PY";

} // namespace detail

inline std::string trace_csv(const ResultBundle& b)
{
    std::string s = std::string(kTraceHeader) + "\n";
    for (const auto& r : b.runs) {
        const std::string comb = to_string(r.combiner), eq = to_string(r.equalizer);
        const auto emit = [&](const char* src, const RMat& node, const RVec& net) {
            for (Eigen::Index i = 0; i < net.size(); ++i) {
                detail::append_row(s, comb, eq, src, static_cast<std::size_t>(i), 0, net[i]);
                for (Eigen::Index k = 0; k < node.rows(); ++k)
                    detail::append_row(s, comb, eq, src, static_cast<std::size_t>(i), static_cast<std::size_t>(k + 1),
                                       node(k, i));
            }
        };
        if (r.sim.node.size() > 0)
            emit("sim", r.sim.node, r.sim.network);
        if (r.theory)
            emit("theory", r.theory->trace.node, r.theory->trace.network);
    }
    return s;
}

inline std::string steady_state_csv(const ResultBundle& b)
{
    std::string s = std::string(kSteadyHeader) + "\n";
    for (const auto& r : b.runs) {
        const std::string comb = to_string(r.combiner), eq = to_string(r.equalizer);
        if (r.sim.node.size() > 0) {
            detail::append_row(s, comb, eq, "sim", std::nullopt, 0, r.sim.network_steady);
            for (Eigen::Index k = 0; k < r.sim.node_steady.size(); ++k)
                detail::append_row(s, comb, eq, "sim", std::nullopt, static_cast<std::size_t>(k + 1), r.sim.node_steady[k]);
        }
        if (r.theory) {
            detail::append_row(s, comb, eq, "theory", std::nullopt, 0, r.theory->network_steady);
            for (Eigen::Index k = 0; k < r.theory->node_steady.size(); ++k)
                detail::append_row(s, comb, eq, "theory", std::nullopt, static_cast<std::size_t>(k + 1),
                                   r.theory->node_steady[k]);
        }
    }
    return s;
}

inline nlohmann::json meta_json(const ResultBundle& b)
{
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : b.runs) {
        nlohmann::json j = {{"combiner", to_string(r.combiner)}, {"equalizer", to_string(r.equalizer)}};
        if (r.sim.node.size() > 0) {
            j["sim_steady_msd_db"] = linear_to_db(r.sim.network_steady);
            j["sim_steady_stderr_linear"] = r.network_steady_stderr;
            j["max_stochasticity_error"] = r.max_stochasticity_error;
        }
        if (r.theory) {
            j["theory_steady_msd_db"] = linear_to_db(r.theory->network_steady);
            j["spectral_radius_B"] = r.theory->spectral_radius;
            j["q_block_max_norm"] = r.theory->q_norm;
            j["upper_bound_db"] = r.theory->upper_bound ? nlohmann::json(linear_to_db(*r.theory->upper_bound))
                                                        : nlohmann::json(nullptr);
        }
        runs.push_back(std::move(j));
    }
    return {{"software", "dlms-ini"},
            {"version", kVersion},
            {"config_hash", b.config_hash},
            {"seed", b.seed},
            {"trials", b.trials},
            {"horizon", b.horizon},
            {"steady_window", b.window},
            {"node_count", b.node_count},
            {"topology", b.topology},
            {"runs", std::move(runs)}};
}

/// Writes trace.csv, steady_state.csv, meta.json and plot_msd.py into `dir`.
inline void emit_outputs(const ResultBundle& b, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    detail::write_atomic(dir / "trace.csv", trace_csv(b));
    detail::write_atomic(dir / "steady_state.csv", steady_state_csv(b));
    detail::write_atomic(dir / "meta.json", meta_json(b).dump(2) + "\n");
    detail::write_atomic(dir / "plot_msd.py", detail::kPlotScript);
}

/// Parses a trace.csv produced by emit_outputs.
inline std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<TraceRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 7)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
        TraceRow r;
        r.combiner = f[0];
        r.equalizer = f[1];
        r.source = f[2];
        r.iteration = std::stoull(f[3]);
        r.node = std::stoull(f[4]);
        r.msd_linear = std::strtod(f[5].c_str(), nullptr);
        r.msd_db = std::strtod(f[6].c_str(), nullptr);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace dlms

#endif // DLMS_EXPERIMENT_HPP
