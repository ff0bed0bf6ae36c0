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

#ifndef DLMS_ENGINE_HPP
#define DLMS_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "combination.hpp"
#include "node_stats.hpp"
#include "types.hpp"
#include "wireless_channel.hpp"

namespace dlms {

/// The unknown parameter vector; fixed for a whole run.
struct GroundTruth {
    CVec omega;
    Eigen::Index dim() const { return omega.size(); }
};

/// Local filter state of one node.
struct NodeState {
    NodeStats stats;
    CMat factor; ///< L with L L^* = R_u,k
    CVec estimate;
    CVec intermediate;

    NodeState() = default;
    explicit NodeState(NodeStats s) : stats(std::move(s))
    {
        stats.validate();
        factor = stats.sampling_factor();
        estimate = CVec::Zero(stats.dim());
        intermediate = CVec::Zero(stats.dim());
    }
};

struct Measurement {
    CRow regressor;
    cplx noise;
    cplx observation;
};

/// d = u w^o + v with u ~ CN(0, R_u) as a row vector and v ~ CN(0, sigma_v^2).
inline Measurement draw_measurement(const NodeState& node, const GroundTruth& truth, Rng& rng)
{
    const Eigen::Index M = node.stats.dim();
    require(truth.dim() == M, "draw_measurement: dimension mismatch");
    CVec z(M);
    fill_complex_normal(rng, z, 1.0);
    Measurement m;
    m.regressor = (node.factor * z).adjoint();
    m.noise = complex_normal(rng, node.stats.meas_noise_var);
    m.observation = (m.regressor * truth.omega)(0) + m.noise;
    return m;
}

/// psi = w_prev + mu u^* (d - u w_prev).
inline CVec adapt(const NodeState& node, const CRow& regressor, cplx observation)
{
    const cplx err = observation - (regressor * node.estimate)(0);
    return node.estimate + node.stats.step_size * regressor.adjoint() * err;
}

/// w_k = a_kk psi_k + sum_{l != k} a_lk g_lk psi_lk. `received` maps each
/// active neighbour to (psi_lk, g_lk); `weights` is the full column k.
inline CVec combine(std::size_t k, const std::map<std::size_t, std::pair<CVec, cplx>>& received, const CVec& own_psi,
                    const RVec& weights)
{
    const auto ki = static_cast<Eigen::Index>(k);
    double total = weights[ki];
    CVec out = weights[ki] * own_psi;
    for (const auto& [l, rx] : received) {
        if (l == k)
            continue;
        const double a = weights[static_cast<Eigen::Index>(l)];
        out += a * rx.second * rx.first;
        total += a;
    }
    if (std::abs(total - 1.0) > kStochasticTol || std::abs(weights.sum() - 1.0) > kStochasticTol)
        throw ContractError("combine: weights do not sum to one on the active set");
    return out;
}

/// Every random quantity consumed by one iteration. Drawn up front so that the
/// same realization can be replayed through an independent implementation.
struct IterationDraws {
    std::vector<CRow> regressor; ///< per node
    std::vector<cplx> meas_noise; ///< per node
    CMat beta;                    ///< (l, k) for l in N_k \ {k}
    CMat chan_noise;              ///< M x K^2, column l*K + k holds n_lk,i

    Eigen::Index noise_col(std::size_t l, std::size_t k, std::size_t K) const
    {
        return static_cast<Eigen::Index>(l * K + k);
    }
};

/// What one iteration produced; enough to rebuild the global error recursion.
struct IterationRecord {
    RVec sq_error;                              ///< ||w^o - w_k,i||^2 per node
    CMat error;                                 ///< M x K, columns w^o - w_k,i
    CMat intermediate;                          ///< M x K, psi_k,i
    RMat weights;                               ///< K x K combination matrix A_i
    CMat gains;                                 ///< K x K, g_lk(i) (zero when gated out)
    std::vector<std::vector<std::size_t>> active;
    double stochasticity_error = 0.0;
};

/// Adapt-then-combine diffusion LMS over the impaired wireless channel.
class DiffusionNetwork {
public:
    DiffusionNetwork(const ChannelModel& channel, const std::vector<NodeStats>& stats, GroundTruth truth,
                     Equalizer eq, Combiner combiner)
        : channel_(&channel), truth_(std::move(truth)), eq_(eq), combiner_(std::move(combiner))
    {
        const std::size_t K = channel.node_count();
        require(stats.size() == K, "DiffusionNetwork: one NodeStats per node required");
        nodes_.reserve(K);
        for (const auto& s : stats) {
            nodes_.emplace_back(s);
            require(nodes_.back().stats.dim() == truth_.dim(), "DiffusionNetwork: regressor/truth dimension mismatch");
        }
        eq_received_.assign(K, CVec::Zero(truth_.dim()));
        rx_.beta.reserve(K);
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    Eigen::Index dim() const noexcept { return truth_.dim(); }
    const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
    std::vector<NodeState>& nodes() noexcept { return nodes_; }
    const GroundTruth& truth() const noexcept { return truth_; }
    const Combiner& combiner() const noexcept { return combiner_; }

    /// Fixed draw order: regressors and measurement noise per node, then beta
    /// for every in-range link, then channel noise for every in-range link.
    IterationDraws draw(Rng& rng) const
    {
        const std::size_t K = node_count();
        const Eigen::Index M = dim();
        IterationDraws d;
        d.regressor.resize(K);
        d.meas_noise.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            Measurement m = draw_measurement(nodes_[k], truth_, rng);
            d.regressor[k] = std::move(m.regressor);
            d.meas_noise[k] = m.noise;
        }
        const auto Ki = static_cast<Eigen::Index>(K);
        d.beta = CMat::Zero(Ki, Ki);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l : channel_->senders(k))
                d.beta(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = channel_->draw_beta(l, k, rng);
        d.chan_noise = CMat::Zero(M, Ki * Ki);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l : channel_->senders(k))
                fill_complex_normal(rng, d.chan_noise.col(d.noise_col(l, k, K)), channel_->noise_var(l, k));
        return d;
    }

    IterationRecord step(Rng& rng) { return apply(draw(rng)); }

    /// Runs one iteration on the given realization:
    /// adapt, transmit, gate, weigh, equalize and combine.
    IterationRecord apply(const IterationDraws& d)
    {
        const std::size_t K = node_count();
        const Eigen::Index M = dim();
        const auto Ki = static_cast<Eigen::Index>(K);

        for (std::size_t k = 0; k < K; ++k) {
            const cplx obs = (d.regressor[k] * truth_.omega)(0) + d.meas_noise[k];
            nodes_[k].intermediate = adapt(nodes_[k], d.regressor[k], obs);
        }

        IterationRecord rec;
        rec.sq_error.resize(Ki);
        rec.error.resize(M, Ki);
        rec.intermediate.resize(M, Ki);
        rec.weights = RMat::Zero(Ki, Ki);
        rec.gains = CMat::Zero(Ki, Ki);
        rec.active.resize(K);
        for (std::size_t k = 0; k < K; ++k)
            rec.intermediate.col(static_cast<Eigen::Index>(k)) = nodes_[k].intermediate;

        new_estimates_.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            const auto& senders = channel_->senders(k);
            rx_.beta.resize(senders.size());
            for (std::size_t j = 0; j < senders.size(); ++j)
                rx_.beta[j] = d.beta(static_cast<Eigen::Index>(senders[j]), ki);
            channel_->evaluate_receiver(k, eq_, rx_);

            auto& active = rec.active[k];
            active.clear();
            active.push_back(k);
            for (std::size_t j = 0; j < senders.size(); ++j) {
                if (!rx_.active[j])
                    continue;
                const std::size_t l = senders[j];
                active.push_back(l);
                // psi_lk = beta_lk psi_l + sum_{l' != l} beta_l'k psi_l' + n_lk
                CVec& y = eq_received_[l];
                y = rx_.beta[j] * nodes_[l].intermediate;
                for (std::size_t m = 0; m < senders.size(); ++m)
                    if (m != j)
                        y += rx_.beta[m] * nodes_[senders[m]].intermediate;
                y += d.chan_noise.col(d.noise_col(l, k, K));
                y *= rx_.gain[j];
                rec.gains(static_cast<Eigen::Index>(l), ki) = rx_.gain[j];
            }
            std::sort(active.begin(), active.end());

            RVec col = combiner_.column(k, active, eq_received_, nodes_[k].intermediate, nodes_[k].estimate);
            double total = 0.0;
            CVec w = CVec::Zero(M);
            for (std::size_t l : active) {
                const double a = col[static_cast<Eigen::Index>(l)];
                total += a;
                if (l == k)
                    w += a * nodes_[k].intermediate;
                else
                    w += a * eq_received_[l];
            }
            const double err = std::max(std::abs(total - 1.0), std::abs(col.sum() - 1.0));
            if (err > kStochasticTol)
                throw ContractError("combination weights are not left-stochastic on the active set");
            rec.stochasticity_error = std::max(rec.stochasticity_error, err);
            rec.weights.col(ki) = col;
            new_estimates_[k] = std::move(w);
        }

        for (std::size_t k = 0; k < K; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            nodes_[k].estimate = std::move(new_estimates_[k]);
            rec.error.col(ki) = truth_.omega - nodes_[k].estimate;
            rec.sq_error[ki] = rec.error.col(ki).squaredNorm();
        }
        return rec;
    }

private:
    const ChannelModel* channel_;
    GroundTruth truth_;
    Equalizer eq_;
    Combiner combiner_;
    std::vector<NodeState> nodes_;
    std::vector<CVec> eq_received_;
    std::vector<CVec> new_estimates_;
    ChannelModel::ReceiverDraw rx_;
};

// ---------------------------------------------------------------------------
// Trials and MSD measurement
// ---------------------------------------------------------------------------

/// Output of one independent run.
struct TrialResult {
    RMat sq_error;          ///< K x T
    CMat tail_mean_error;   ///< M x K, time average of w^o - w_k,i over the tail window
    double max_stochasticity_error = 0.0;
};

/// Runs `horizon` iterations from w_k,-1 = 0 and records the squared errors.
/// `tail_window` iterations at the end are averaged into tail_mean_error.
inline TrialResult run_trial(DiffusionNetwork& net, std::size_t horizon, std::size_t tail_window, Rng& rng)
{
    require(horizon >= 1, "run_trial: horizon must be >= 1");
    require(tail_window >= 1 && tail_window <= horizon, "run_trial: tail window must lie in [1, horizon]");
    const auto K = static_cast<Eigen::Index>(net.node_count());
    TrialResult r;
    r.sq_error.resize(K, static_cast<Eigen::Index>(horizon));
    r.tail_mean_error = CMat::Zero(net.dim(), K);
    for (std::size_t i = 0; i < horizon; ++i) {
        IterationRecord rec = net.step(rng);
        r.sq_error.col(static_cast<Eigen::Index>(i)) = rec.sq_error;
        if (i + tail_window >= horizon)
            r.tail_mean_error += rec.error;
        r.max_stochasticity_error = std::max(r.max_stochasticity_error, rec.stochasticity_error);
    }
    r.tail_mean_error /= static_cast<double>(tail_window);
    return r;
}

/// Trial-averaged learning curves.
struct MsdTraces {
    RMat node;           ///< K x T, eta_k(i)
    RVec network;        ///< T, eta(i) = mean over nodes
    RVec node_steady;    ///< K, mean of eta_k over the tail window
    double network_steady = 0.0;
    RVec network_steady_per_trial; ///< per-trial tail mean of the network curve
};

/// Averages per-trial squared errors in trial order (deterministic reduction).
inline MsdTraces measure_msd(const std::vector<RMat>& per_trial_sq_error, std::size_t tail_window)
{
    if (per_trial_sq_error.empty())
        throw ContractError("measure_msd: no trials");
    const RMat& first = per_trial_sq_error.front();
    const Eigen::Index K = first.rows(), T = first.cols();
    require(tail_window >= 1 && static_cast<Eigen::Index>(tail_window) <= T, "measure_msd: bad tail window");
    MsdTraces m;
    m.node = RMat::Zero(K, T);
    m.network_steady_per_trial.resize(static_cast<Eigen::Index>(per_trial_sq_error.size()));
    const Eigen::Index W = static_cast<Eigen::Index>(tail_window);
    for (std::size_t t = 0; t < per_trial_sq_error.size(); ++t) {
        const RMat& e = per_trial_sq_error[t];
        require(e.rows() == K && e.cols() == T, "measure_msd: inconsistent trial shapes");
        m.node += e;
        m.network_steady_per_trial[static_cast<Eigen::Index>(t)] = e.rightCols(W).mean();
    }
    m.node /= static_cast<double>(per_trial_sq_error.size());
    m.network = m.node.colwise().mean().transpose();
    m.node_steady = m.node.rightCols(W).rowwise().mean();
    m.network_steady = m.network.tail(W).mean();
    return m;
}

} // namespace dlms

#endif // DLMS_ENGINE_HPP
