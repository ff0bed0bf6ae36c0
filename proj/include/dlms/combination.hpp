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

#ifndef DLMS_COMBINATION_HPP
#define DLMS_COMBINATION_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "network_model.hpp"
#include "node_stats.hpp"
#include "types.hpp"
#include "wireless_channel.hpp"

namespace dlms {

inline constexpr double kStochasticTol = 1e-10;

// ---------------------------------------------------------------------------
// Closed-form optimal weights
// ---------------------------------------------------------------------------

/// alpha_lk^2. Self term: mu_k^2 sigma_v,k^2 Tr(R_u,k). Neighbour term adds
/// |g_lk|^2 M (sigma_i,lk^2 + sigma_n,lk^2).
inline double optimal_alpha_sq(std::size_t l, std::size_t k, double mu_l, double meas_noise_var_l,
                               double trace_ru_l, double eq_gain_sq, double ini_var, double chan_noise_var,
                               Eigen::Index M)
{
    if (mu_l < 0.0 || meas_noise_var_l < 0.0 || trace_ru_l < 0.0 || eq_gain_sq < 0.0 || ini_var < 0.0 ||
        chan_noise_var < 0.0 || M < 1)
        throw ContractError("optimal_alpha_sq: negative input");
    const double self = mu_l * mu_l * meas_noise_var_l * trace_ru_l;
    if (l == k)
        return self;
    return self + eq_gain_sq * static_cast<double>(M) * (ini_var + chan_noise_var);
}

/// a_l = alpha_l^-2 / sum_m alpha_m^-2 over the active set. An infinite alpha^2
/// (link with no usable statistics) gets weight 0.
inline void optimal_weights(std::span<const double> alpha_sq, std::span<double> out)
{
    require(alpha_sq.size() == out.size(), "optimal_weights: size mismatch");
    require(!alpha_sq.empty(), "optimal_weights: empty active set");
    double total = 0.0;
    for (double a : alpha_sq) {
        if (!(a > 0.0))
            throw ContractError("optimal_weights: alpha^2 must be positive on the active set");
        total += 1.0 / a;
    }
    if (!(total > 0.0))
        throw ContractError("optimal_weights: no finite alpha^2 on the active set");
    for (std::size_t j = 0; j < alpha_sq.size(); ++j)
        out[j] = (1.0 / alpha_sq[j]) / total;
}

inline std::vector<double> optimal_weights(const std::vector<double>& alpha_sq)
{
    std::vector<double> w(alpha_sq.size());
    optimal_weights(std::span<const double>(alpha_sq), std::span<double>(w));
    return w;
}

/// Nominal-weight objective sum_l zeta_l^2 p_l c_l.
inline double nominal_objective(std::span<const double> zeta, std::span<const double> alpha_sq,
                                std::span<const double> succ_prob)
{
    double s = 0.0;
    for (std::size_t j = 0; j < zeta.size(); ++j)
        s += zeta[j] * zeta[j] * succ_prob[j] * alpha_sq[j];
    return s;
}

/// Minimiser of nominal_objective subject to zeta >= 0 and sum_l p_l zeta_l = 1
/// (stationarity 2 zeta_l p_l c_l = lambda p_l): zeta_l = c_l^-1 / sum_m p_m c_m^-1.
/// Links with p_l = 0 do not enter the constraint and get zeta_l = 0.
inline std::vector<double> kkt_nominal_weights(std::span<const double> alpha_sq, std::span<const double> succ_prob)
{
    require(alpha_sq.size() == succ_prob.size(), "kkt_nominal_weights: size mismatch");
    double den = 0.0;
    for (std::size_t j = 0; j < alpha_sq.size(); ++j) {
        require(alpha_sq[j] > 0.0, "kkt_nominal_weights: alpha^2 must be positive");
        require(succ_prob[j] >= 0.0 && succ_prob[j] <= 1.0, "kkt_nominal_weights: p outside [0,1]");
        den += succ_prob[j] / alpha_sq[j];
    }
    require(den > 0.0, "kkt_nominal_weights: every link has p = 0");
    std::vector<double> z(alpha_sq.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        z[j] = succ_prob[j] > 0.0 ? (1.0 / alpha_sq[j]) / den : 0.0;
    return z;
}

/// K x K table of alpha_lk^2 for l in N_k from node statistics and link moments.
/// Links never seen active in the moment run get +inf (zero weight).
inline RMat optimal_alpha_table(const NetworkTopology& topo, const std::vector<NodeStats>& nodes,
                                const LinkMomentTable& moments)
{
    const std::size_t K = topo.node_count();
    const auto n = static_cast<Eigen::Index>(K);
    RMat t = RMat::Constant(n, n, kInf);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l : topo.neighbors(k)) {
            const NodeStats& s = nodes.at(l);
            if (l == k) {
                t(l, k) = optimal_alpha_sq(l, k, s.step_size, s.meas_noise_var, s.trace_ru(), 0.0, 0.0, 0.0,
                                           s.dim());
                continue;
            }
            const LinkMoments& m = moments.at(l, k);
            if (!m.available)
                continue;
            t(l, k) = optimal_alpha_sq(l, k, s.step_size, s.meas_noise_var, s.trace_ru(), m.eq_gain_sq, m.ini_var,
                                       m.noise_var, s.dim());
        }
    return t;
}

// ---------------------------------------------------------------------------
// Adaptive rule
// ---------------------------------------------------------------------------

/// Running estimates alpha_hat_lk^2 with forgetting factor tau in (0, 1).
struct AdaptiveCombinerState {
    RMat alpha_sq_est;
    double tau = 0.1;

    AdaptiveCombinerState() = default;
    AdaptiveCombinerState(std::size_t K, double tau_, double init = 1.0)
        : alpha_sq_est(RMat::Constant(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K), init)), tau(tau_)
    {
        require(tau_ > 0.0 && tau_ <= 1.0, "adaptive combiner: tau must lie in (0, 1]");
        require(init > 0.0, "adaptive combiner: initial alpha^2 must be positive");
    }
};

/// One step of the exponential averaging. `eq_received[l]` holds g_lk(i) psi_lk,i
/// for every l in `active` other than k. Links outside the active set keep
/// their previous estimate.
inline void adaptive_update(AdaptiveCombinerState& st, std::size_t k, std::span<const std::size_t> active,
                            const std::vector<CVec>& eq_received, const CVec& own_psi, const CVec& prev_omega)
{
    const double tau = st.tau;
    for (std::size_t l : active) {
        const double inst = l == k ? (own_psi - prev_omega).squaredNorm() : (eq_received.at(l) - prev_omega).squaredNorm();
        double& a = st.alpha_sq_est(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
        a = (1.0 - tau) * a + tau * inst;
    }
}

/// Weights from the running estimates, same normalisation as optimal_weights.
inline RVec adaptive_weights(const AdaptiveCombinerState& st, std::size_t k, std::span<const std::size_t> active)
{
    std::vector<double> a(active.size()), w(active.size());
    for (std::size_t j = 0; j < active.size(); ++j)
        a[j] = st.alpha_sq_est(static_cast<Eigen::Index>(active[j]), static_cast<Eigen::Index>(k));
    optimal_weights(std::span<const double>(a), std::span<double>(w));
    RVec col = RVec::Zero(st.alpha_sq_est.rows());
    for (std::size_t j = 0; j < active.size(); ++j)
        col[static_cast<Eigen::Index>(active[j])] = w[j];
    return col;
}

// ---------------------------------------------------------------------------
// Strategy selection
// ---------------------------------------------------------------------------

enum class CombinerKind { optimal, adaptive, uniform, max_degree, laplacian, relative_variance };

inline const char* to_string(CombinerKind c)
{
    switch (c) {
    case CombinerKind::optimal: return "optimal";
    case CombinerKind::adaptive: return "adaptive";
    case CombinerKind::uniform: return "uniform";
    case CombinerKind::max_degree: return "max_degree";
    case CombinerKind::laplacian: return "laplacian";
    case CombinerKind::relative_variance: return "relative_variance";
    }
    return "?";
}

inline CombinerKind parse_combiner(const std::string& s)
{
    for (auto c : {CombinerKind::optimal, CombinerKind::adaptive, CombinerKind::uniform, CombinerKind::max_degree,
                   CombinerKind::laplacian, CombinerKind::relative_variance})
        if (s == to_string(c))
            return c;
    throw ConfigError("combiner", "unknown combiner '" + s + "'");
}

/// Column k of a literature baseline on the active set (active contains k).
///   uniform            1/|N_k,i|
///   max_degree         1/K off-diagonal, remainder on the diagonal
///   laplacian          I - L/n_max on the receive graph, n_max = largest static |N_k|
///   relative_variance  proportional to (mu_l^2 sigma_v,l^2 Tr R_u,l)^-1
inline RVec baseline_column(CombinerKind kind, const NetworkTopology& topo, const std::vector<NodeStats>& nodes,
                            std::size_t k, std::span<const std::size_t> active)
{
    const std::size_t K = topo.node_count();
    RVec col = RVec::Zero(static_cast<Eigen::Index>(K));
    const double n = static_cast<double>(active.size());
    const auto ki = static_cast<Eigen::Index>(k);
    switch (kind) {
    case CombinerKind::uniform:
        for (std::size_t l : active)
            col[static_cast<Eigen::Index>(l)] = 1.0 / n;
        break;
    case CombinerKind::max_degree:
    case CombinerKind::laplacian: {
        const double kappa = kind == CombinerKind::max_degree ? 1.0 / static_cast<double>(K)
                                                              : 1.0 / static_cast<double>(topo.max_degree());
        for (std::size_t l : active)
            if (l != k)
                col[static_cast<Eigen::Index>(l)] = kappa;
        col[ki] = 1.0 - (n - 1.0) * kappa;
        break;
    }
    case CombinerKind::relative_variance: {
        std::vector<double> a(active.size()), w(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) {
            const NodeStats& s = nodes.at(active[j]);
            a[j] = s.step_size * s.step_size * s.meas_noise_var * s.trace_ru();
        }
        optimal_weights(std::span<const double>(a), std::span<double>(w));
        for (std::size_t j = 0; j < active.size(); ++j)
            col[static_cast<Eigen::Index>(active[j])] = w[j];
        break;
    }
    default:
        throw ContractError("baseline_column: not a baseline combiner");
    }
    return col;
}

/// Full K x K matrix for a baseline; column k is supported on active_sets[k].
inline RMat baseline_weights(CombinerKind kind, const NetworkTopology& topo,
                             const std::vector<std::vector<std::size_t>>& active_sets,
                             const std::vector<NodeStats>& nodes)
{
    const auto K = static_cast<Eigen::Index>(topo.node_count());
    RMat A = RMat::Zero(K, K);
    for (std::size_t k = 0; k < topo.node_count(); ++k)
        A.col(static_cast<Eigen::Index>(k)) = baseline_column(kind, topo, nodes, k, active_sets.at(k));
    return A;
}

/// Largest |column sum - 1| of A.
inline double stochasticity_error(const RMat& A)
{
    double e = 0.0;
    for (Eigen::Index k = 0; k < A.cols(); ++k)
        e = std::max(e, std::abs(A.col(k).sum() - 1.0));
    return e;
}

/// Stateful per-trial weight producer covering every strategy. Not shared
/// between trials.
class Combiner {
public:
    Combiner(CombinerKind kind, const NetworkTopology& topo, std::vector<NodeStats> nodes, RMat alpha_sq = {},
             double tau = 0.1, double alpha_init = 1.0)
        : kind_(kind), topo_(&topo), nodes_(std::move(nodes)), alpha_sq_(std::move(alpha_sq))
    {
        if (kind_ == CombinerKind::adaptive)
            state_ = AdaptiveCombinerState(topo.node_count(), tau, alpha_init);
        if (kind_ == CombinerKind::optimal) {
            const auto K = static_cast<Eigen::Index>(topo.node_count());
            require(alpha_sq_.rows() == K && alpha_sq_.cols() == K, "Combiner: optimal needs a K x K alpha^2 table");
        }
    }

    CombinerKind kind() const noexcept { return kind_; }
    const AdaptiveCombinerState& adaptive_state() const noexcept { return state_; }

    /// Weights for node k at the current iteration. For the adaptive rule the
    /// running estimates are updated first with this iteration's data.
    RVec column(std::size_t k, std::span<const std::size_t> active, const std::vector<CVec>& eq_received,
                const CVec& own_psi, const CVec& prev_omega)
    {
        switch (kind_) {
        case CombinerKind::adaptive:
            adaptive_update(state_, k, active, eq_received, own_psi, prev_omega);
            return adaptive_weights(state_, k, active);
        case CombinerKind::optimal: return static_column(k, active);
        default: return baseline_column(kind_, *topo_, nodes_, k, active);
        }
    }

    /// Weights that depend only on the active set. The adaptive rule is
    /// replaced by its closed-form target (requires the alpha^2 table).
    RVec static_column(std::size_t k, std::span<const std::size_t> active) const
    {
        if (kind_ != CombinerKind::optimal && kind_ != CombinerKind::adaptive)
            return baseline_column(kind_, *topo_, nodes_, k, active);
        require(alpha_sq_.size() > 0, "Combiner: alpha^2 table not provided");
        std::vector<double> a(active.size()), w(active.size());
        for (std::size_t j = 0; j < active.size(); ++j)
            a[j] = alpha_sq_(static_cast<Eigen::Index>(active[j]), static_cast<Eigen::Index>(k));
        optimal_weights(std::span<const double>(a), std::span<double>(w));
        RVec col = RVec::Zero(static_cast<Eigen::Index>(topo_->node_count()));
        for (std::size_t j = 0; j < active.size(); ++j)
            col[static_cast<Eigen::Index>(active[j])] = w[j];
        return col;
    }

private:
    CombinerKind kind_;
    const NetworkTopology* topo_;
    std::vector<NodeStats> nodes_;
    RMat alpha_sq_;
    AdaptiveCombinerState state_;
};

} // namespace dlms

#endif // DLMS_COMBINATION_HPP
