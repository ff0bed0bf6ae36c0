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

#ifndef DLMS_WIRELESS_CHANNEL_HPP
#define DLMS_WIRELESS_CHANNEL_HPP

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "network_model.hpp"
#include "types.hpp"

namespace dlms {

/// Link-level parameters. Matrices are K x K, entry (l, k) describes the
/// directed link l -> k; diagonal entries are never read.
struct ChannelParams {
    double tx_power = 1.0;
    double pathloss_exp = 2.0;
    RMat fading_var;
    RMat chan_noise_var;
    double sinr_threshold = 0.1; ///< linear scale

    static ChannelParams uniform(std::size_t K, double tx_power, double pathloss_exp, double fading_var,
                                 double chan_noise_var, double sinr_threshold_linear)
    {
        ChannelParams p;
        p.tx_power = tx_power;
        p.pathloss_exp = pathloss_exp;
        const auto n = static_cast<Eigen::Index>(K);
        p.fading_var = RMat::Constant(n, n, fading_var);
        p.chan_noise_var = RMat::Constant(n, n, chan_noise_var);
        p.sinr_threshold = sinr_threshold_linear;
        return p;
    }

    void validate(std::size_t K) const
    {
        require(tx_power > 0.0, "channel: tx_power must be positive");
        require(pathloss_exp > 0.0, "channel: pathloss_exp must be positive");
        require(sinr_threshold >= 0.0, "channel: sinr_threshold must be non-negative");
        const auto n = static_cast<Eigen::Index>(K);
        require(fading_var.rows() == n && fading_var.cols() == n, "channel: fading_var must be K x K");
        require(chan_noise_var.rows() == n && chan_noise_var.cols() == n,
                "channel: chan_noise_var must be K x K");
        require((fading_var.array() >= 0.0).all(), "channel: fading variances must be >= 0");
        require((chan_noise_var.array() >= 0.0).all(), "channel: noise variances must be >= 0");
    }
};

enum class Equalizer { zf, mmse, none };

inline const char* to_string(Equalizer e)
{
    switch (e) {
    case Equalizer::zf: return "zf";
    case Equalizer::mmse: return "mmse";
    case Equalizer::none: return "none";
    }
    return "?";
}

inline Equalizer parse_equalizer(const std::string& s)
{
    if (s == "zf" || s == "ZF")
        return Equalizer::zf;
    if (s == "mmse" || s == "MMSE")
        return Equalizer::mmse;
    if (s == "none")
        return Equalizer::none;
    throw ConfigError("equalizer", "unknown equalizer '" + s + "' (expected zf, mmse or none)");
}

/// P_o / r^alpha for the directed link l -> k.
inline double path_gain(const ChannelParams& p, const NetworkTopology& topo, std::size_t l, std::size_t k)
{
    if (l == k)
        throw ContractError("path_gain: self link is ideal and has no path loss");
    const double r = topo.distance(l, k);
    if (!(r > 0.0))
        throw ContractError("path_gain: coincident nodes give a singular path loss");
    return p.tx_power / std::pow(r, p.pathloss_exp);
}

/// beta = h * sqrt(P_o / r^alpha).
inline cplx beta_from_fading(cplx h, double tx_power, double distance, double pathloss_exp)
{
    return h * std::sqrt(tx_power / std::pow(distance, pathloss_exp));
}

/// Variance of beta_lk: sigma_h^2 * P_o / r^alpha.
inline double beta_variance(const ChannelParams& p, const NetworkTopology& topo, std::size_t l, std::size_t k)
{
    return p.fading_var(l, k) * path_gain(p, topo, l, k);
}

inline cplx draw_beta(const ChannelParams& p, const NetworkTopology& topo, std::size_t l, std::size_t k, Rng& rng)
{
    const double g = path_gain(p, topo, l, k);
    const cplx h = complex_normal(rng, p.fading_var(l, k));
    return h * std::sqrt(g);
}

/// sigma_i,lk^2: interference power on link l -> k summed over the static
/// neighbourhood N_k \ {l, k}.
inline double ini_variance(const ChannelParams& p, const NetworkTopology& topo, std::size_t l, std::size_t k)
{
    if (!topo.is_neighbor(l, k))
        throw ContractError("ini_variance: l is not in N_k");
    double s = 0.0;
    for (std::size_t m : topo.neighbors(k))
        if (m != l && m != k)
            s += beta_variance(p, topo, m, k);
    return s;
}

/// Superposition of every transmission into k except those of k and l.
/// `betas` is keyed by transmitter and holds beta_{l'k}(i) for receiver k.
inline CVec draw_ini(const std::map<std::size_t, CVec>& transmissions, const std::map<std::size_t, cplx>& betas,
                     std::size_t k, std::size_t l, Eigen::Index dim)
{
    CVec out = CVec::Zero(dim);
    for (const auto& [src, psi] : transmissions) {
        if (src == k || src == l)
            continue;
        auto it = betas.find(src);
        if (it == betas.end())
            throw ContractError("draw_ini: missing beta for transmitting interferer " + std::to_string(src));
        if (psi.size() != dim)
            throw ContractError("draw_ini: transmission has wrong length");
        out += it->second * psi;
    }
    return out;
}

/// |beta_lk|^2 / (sum of |beta_l'k|^2 over the other transmitters + sigma_n^2).
/// Returns +inf when the denominator vanishes.
inline double compute_sinr(const std::map<std::size_t, cplx>& betas_into_k, std::size_t l, double chan_noise_var)
{
    auto it = betas_into_k.find(l);
    if (it == betas_into_k.end())
        throw ContractError("compute_sinr: l is not a transmitting neighbour");
    double interference = 0.0;
    for (const auto& [src, b] : betas_into_k)
        if (src != l)
            interference += std::norm(b);
    const double den = interference + chan_noise_var;
    const double num = std::norm(it->second);
    if (den == 0.0)
        return kInf;
    return num / den;
}

/// N_{k,i} = {k} plus every l with sinr_lk >= threshold. Sorted ascending.
inline std::vector<std::size_t> gate_links(const std::map<std::size_t, double>& sinrs, double threshold,
                                           std::size_t k)
{
    std::vector<std::size_t> active{k};
    for (const auto& [l, s] : sinrs)
        if (l != k && s >= threshold)
            active.push_back(l);
    std::sort(active.begin(), active.end());
    return active;
}

inline cplx zf_gain(cplx beta)
{
    const double p = std::norm(beta);
    if (p == 0.0)
        throw ContractError("zf_gain: beta = 0 (link should have been gated out)");
    return std::conj(beta) / p;
}

inline cplx mmse_gain(cplx beta, double ini_var, double noise_var)
{
    if (ini_var < 0.0 || noise_var < 0.0)
        throw ContractError("mmse_gain: negative variance");
    const double den = ini_var + noise_var + std::norm(beta);
    if (den == 0.0)
        throw ContractError("mmse_gain: beta and both variances are zero");
    return std::conj(beta) / den;
}

inline cplx equalizer_gain(Equalizer eq, cplx beta, double ini_var, double noise_var)
{
    switch (eq) {
    case Equalizer::zf: return zf_gain(beta);
    case Equalizer::mmse: return mmse_gain(beta, ini_var, noise_var);
    case Equalizer::none: return {1.0, 0.0};
    }
    return {1.0, 0.0};
}

/// Precomputed static link quantities plus the per-receiver draw used by both
/// the simulator and the Monte Carlo moment estimators.
class ChannelModel {
public:
    ChannelModel(ChannelParams params, const NetworkTopology& topo) : params_(std::move(params)), topo_(&topo)
    {
        const std::size_t K = topo.node_count();
        params_.validate(K);
        const auto n = static_cast<Eigen::Index>(K);
        sqrt_gain_ = RMat::Zero(n, n);
        ini_var_ = RMat::Zero(n, n);
        senders_.resize(K);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l : topo.neighbors(k)) {
                if (l == k)
                    continue;
                senders_[k].push_back(l);
                sqrt_gain_(l, k) = std::sqrt(path_gain(params_, topo, l, k));
                ini_var_(l, k) = ini_variance(params_, topo, l, k);
            }
    }

    const ChannelParams& params() const noexcept { return params_; }
    const NetworkTopology& topology() const noexcept { return *topo_; }
    std::size_t node_count() const noexcept { return topo_->node_count(); }

    /// N_k \ {k}, ascending.
    const std::vector<std::size_t>& senders(std::size_t k) const { return senders_[k]; }
    double ini_var(std::size_t l, std::size_t k) const { return ini_var_(l, k); }
    double noise_var(std::size_t l, std::size_t k) const { return params_.chan_noise_var(l, k); }
    double beta_var(std::size_t l, std::size_t k) const
    {
        return params_.fading_var(l, k) * sqrt_gain_(l, k) * sqrt_gain_(l, k);
    }

    cplx draw_beta(std::size_t l, std::size_t k, Rng& rng) const
    {
        return complex_normal(rng, params_.fading_var(l, k)) * sqrt_gain_(l, k);
    }

    struct ReceiverDraw {
        std::vector<cplx> beta;   ///< per sender of senders(k)
        std::vector<double> sinr;
        std::vector<char> active;
        std::vector<cplx> gain;   ///< equalizer gain; zero on gated-out links
    };

    /// Draws beta for every in-range sender into k, then gates and equalizes.
    void draw_receiver(std::size_t k, Equalizer eq, Rng& rng, ReceiverDraw& out) const
    {
        const auto& s = senders_[k];
        out.beta.resize(s.size());
        for (std::size_t j = 0; j < s.size(); ++j)
            out.beta[j] = draw_beta(s[j], k, rng);
        evaluate_receiver(k, eq, out);
    }

    /// SINR, gating and gains for already-populated `out.beta`. Every in-range
    /// sender transmits, so link j sees all other senders as interference.
    void evaluate_receiver(std::size_t k, Equalizer eq, ReceiverDraw& out) const
    {
        const auto& s = senders_[k];
        const std::size_t n = s.size();
        out.sinr.resize(n);
        out.active.resize(n);
        out.gain.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double p = std::norm(out.beta[j]);
            double interf = 0.0;
            for (std::size_t m = 0; m < n; ++m)
                if (m != j)
                    interf += std::norm(out.beta[m]);
            const double den = interf + noise_var(s[j], k);
            out.sinr[j] = den == 0.0 ? kInf : p / den;
            out.active[j] = out.sinr[j] >= params_.sinr_threshold ? 1 : 0;
            out.gain[j] = out.active[j] ? equalizer_gain(eq, out.beta[j], ini_var(s[j], k), noise_var(s[j], k))
                                        : cplx{0.0, 0.0};
        }
    }

private:
    ChannelParams params_;
    const NetworkTopology* topo_;
    RMat sqrt_gain_;
    RMat ini_var_;
    std::vector<std::vector<std::size_t>> senders_;
};

/// Monte Carlo link statistics for one directed link l -> k.
struct LinkMoments {
    double beta_var = 0.0;
    double ini_var = 0.0;
    double noise_var = 0.0;
    double succ_prob = 0.0;
    double eq_gain_sq = 0.0;     ///< E{|g|^2 | active}; meaningless when !available
    cplx gain_beta_mean{0.0, 0.0}; ///< E{g beta | active}
    double weight_mean = 0.0;    ///< E{a} under a = zeta * Gamma
    double weight_sq_gain = 0.0; ///< E{a^2 |g|^2} under a = zeta * Gamma
    bool available = false;      ///< link was active at least once
};

/// K x K table of LinkMoments; only entries with l in N_k \ {k} are filled.
class LinkMomentTable {
public:
    LinkMomentTable() = default;
    explicit LinkMomentTable(std::size_t K) : K_(K), m_(K * K) {}
    std::size_t node_count() const noexcept { return K_; }
    LinkMoments& at(std::size_t l, std::size_t k) { return m_.at(l * K_ + k); }
    const LinkMoments& at(std::size_t l, std::size_t k) const { return m_.at(l * K_ + k); }

private:
    std::size_t K_ = 0;
    std::vector<LinkMoments> m_;
};

/// Uniform nominal weights zeta_lk = 1/|N_k| on the static neighbourhoods.
inline RMat uniform_nominal_weights(const NetworkTopology& topo)
{
    const auto n = static_cast<Eigen::Index>(topo.node_count());
    RMat z = RMat::Zero(n, n);
    for (std::size_t k = 0; k < topo.node_count(); ++k)
        for (std::size_t l : topo.neighbors(k))
            z(l, k) = 1.0 / static_cast<double>(topo.neighbors(k).size());
    return z;
}

/// Estimates p_lk, E{|g|^2 | active}, E{g beta | active} and the nominal-weight
/// moments E{a}, E{a^2 |g|^2} with a_lk = zeta_lk * Gamma_lk over n_samples
/// independent channel realizations. ini_var is filled analytically.
inline LinkMomentTable estimate_link_moments(const ChannelModel& ch, Equalizer eq, const RMat& zeta,
                                             std::size_t n_samples, Rng& rng)
{
    if (n_samples == 0)
        throw ContractError("estimate_link_moments: n_samples must be >= 1");
    const std::size_t K = ch.node_count();
    LinkMomentTable tab(K);
    std::vector<std::vector<double>> hits(K), g2(K);
    std::vector<std::vector<cplx>> gb(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto n = ch.senders(k).size();
        hits[k].assign(n, 0.0);
        g2[k].assign(n, 0.0);
        gb[k].assign(n, cplx{});
    }
    ChannelModel::ReceiverDraw d;
    for (std::size_t s = 0; s < n_samples; ++s)
        for (std::size_t k = 0; k < K; ++k) {
            ch.draw_receiver(k, eq, rng, d);
            for (std::size_t j = 0; j < d.beta.size(); ++j)
                if (d.active[j]) {
                    hits[k][j] += 1.0;
                    g2[k][j] += std::norm(d.gain[j]);
                    gb[k][j] += d.gain[j] * d.beta[j];
                }
        }
    const double N = static_cast<double>(n_samples);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& s = ch.senders(k);
        for (std::size_t j = 0; j < s.size(); ++j) {
            const std::size_t l = s[j];
            LinkMoments& m = tab.at(l, k);
            m.beta_var = ch.beta_var(l, k);
            m.ini_var = ch.ini_var(l, k);
            m.noise_var = ch.noise_var(l, k);
            m.succ_prob = hits[k][j] / N;
            m.available = hits[k][j] > 0.0;
            if (m.available) {
                m.eq_gain_sq = g2[k][j] / hits[k][j];
                m.gain_beta_mean = gb[k][j] / hits[k][j];
            }
            const double z = zeta(l, k);
            m.weight_mean = z * m.succ_prob;
            m.weight_sq_gain = z * z * g2[k][j] / N;
        }
    }
    return tab;
}

} // namespace dlms

#endif // DLMS_WIRELESS_CHANNEL_HPP
