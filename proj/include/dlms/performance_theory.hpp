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

#ifndef DLMS_PERFORMANCE_THEORY_HPP
#define DLMS_PERFORMANCE_THEORY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "combination.hpp"
#include "node_stats.hpp"
#include "types.hpp"
#include "wireless_channel.hpp"

namespace dlms {

// ---------------------------------------------------------------------------
// Linear algebra helpers
// ---------------------------------------------------------------------------

template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar, typename DerivedB::Scalar>::ReturnType;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.template cast<Scalar>();
    return out;
}

/// Column-stacking vectorisation.
inline CVec vec(const CMat& x) { return Eigen::Map<const CVec>(x.data(), x.size()); }

inline CMat unvec(const CVec& v, Eigen::Index rows)
{
    require(rows > 0 && v.size() % rows == 0, "unvec: size not divisible by rows");
    return Eigen::Map<const CMat>(v.data(), rows, v.size() / rows);
}

/// max |lambda| via a full complex Schur decomposition.
inline double spectral_radius(const CMat& m)
{
    if (m.rows() != m.cols())
        throw ContractError("spectral_radius: matrix must be square");
    if (m.size() == 0)
        return 0.0;
    Eigen::ComplexEigenSolver<CMat> es(m, false);
    require(es.info() == Eigen::Success, "spectral_radius: eigensolver did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Induced block maximum norm with M x M blocks:
/// max over block rows l of sum_k ||X_lk||_2.
inline double block_max_norm(const CMat& x, Eigen::Index block)
{
    if (block < 1 || x.rows() != x.cols() || x.rows() % block != 0)
        throw ContractError("block_max_norm: dimension not divisible by the block size");
    const Eigen::Index n = x.rows() / block;
    double best = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
        // Neumaier summation keeps the row sum of a stochastic pattern at exactly 1
        // whenever the summands allow it.
        double s = 0.0, c = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto blk = x.block(l * block, k * block, block, block);
            double v;
            if (block == 1) {
                v = std::abs(blk(0, 0));
            } else if (blk.isDiagonal(0.0) && (blk.diagonal().array() == blk(0, 0)).all()) {
                v = std::abs(blk(0, 0));
            } else {
                Eigen::JacobiSVD<CMat> svd(blk);
                v = svd.singularValues()(0);
            }
            const double t = s + v;
            c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
            s = t;
        }
        best = std::max(best, s + c);
    }
    return best;
}

/// Open interval for mu_k guaranteeing mean stability given ||Q^T||_{b,inf}.
struct StepSizeInterval {
    double low = 0.0;
    double high = 0.0;
    bool bounded = true; ///< false when lambda_max(R_u,k) = 0
};

inline StepSizeInterval step_size_interval(const CMat& regressor_cov, double q_norm)
{
    if (!(q_norm > 0.0))
        throw ContractError("step_size_interval: q_norm must be positive");
    Eigen::SelfAdjointEigenSolver<CMat> es(regressor_cov, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 0.0))
        return {-kInf, kInf, false};
    return {(1.0 - 1.0 / q_norm) / lmax, (1.0 + 1.0 / q_norm) / lmax, true};
}

// ---------------------------------------------------------------------------
// Moments of the combination step
// ---------------------------------------------------------------------------

/// Expected weights under a given combination rule and equalizer:
///   a_mean(l,k)  = E{a_lk(i)}
///   q_mean(l,k)  = E{q_lk(i)} (a_kk on the diagonal, a_lk g_lk beta_lk otherwise)
///   a2g2(l,k)    = E{a_lk(i)^2 |g_lk(i)|^2} (off-diagonal only)
struct WeightMoments {
    RMat a_mean;
    CMat q_mean;
    RMat a2g2;
};

using WeightRule = std::function<RVec(std::size_t k, std::span<const std::size_t> active)>;

/// Monte Carlo over independent channel realizations, with the weights of each
/// realization produced by `rule` on the gated active set.
inline WeightMoments estimate_weight_moments(const ChannelModel& ch, Equalizer eq, const WeightRule& rule,
                                             std::size_t n_samples, Rng& rng)
{
    require(n_samples >= 1, "estimate_weight_moments: n_samples must be >= 1");
    const std::size_t K = ch.node_count();
    const auto Ki = static_cast<Eigen::Index>(K);
    WeightMoments wm{RMat::Zero(Ki, Ki), CMat::Zero(Ki, Ki), RMat::Zero(Ki, Ki)};
    ChannelModel::ReceiverDraw d;
    std::vector<std::size_t> active;
    for (std::size_t s = 0; s < n_samples; ++s)
        for (std::size_t k = 0; k < K; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            ch.draw_receiver(k, eq, rng, d);
            const auto& senders = ch.senders(k);
            active.assign(1, k);
            for (std::size_t j = 0; j < senders.size(); ++j)
                if (d.active[j])
                    active.push_back(senders[j]);
            std::sort(active.begin(), active.end());
            const RVec col = rule(k, active);
            wm.a_mean(ki, ki) += col[ki];
            wm.q_mean(ki, ki) += col[ki];
            for (std::size_t j = 0; j < senders.size(); ++j) {
                if (!d.active[j])
                    continue;
                const auto li = static_cast<Eigen::Index>(senders[j]);
                const double a = col[li];
                wm.a_mean(li, ki) += a;
                wm.q_mean(li, ki) += a * d.gain[j] * d.beta[j];
                wm.a2g2(li, ki) += a * a * std::norm(d.gain[j]);
            }
        }
    const double N = static_cast<double>(n_samples);
    wm.a_mean /= N;
    wm.q_mean /= N;
    wm.a2g2 /= N;
    // g beta = 1 by construction under ZF; keep E = 0 exact
    if (eq == Equalizer::zf)
        wm.q_mean = wm.a_mean.cast<cplx>();
    return wm;
}

/// Deterministic weights on the ideal channel (beta = g = 1, every in-range
/// link active): q = a, no interference or noise terms.
inline WeightMoments ideal_channel_moments(const NetworkTopology& topo, const WeightRule& rule)
{
    const auto K = static_cast<Eigen::Index>(topo.node_count());
    WeightMoments wm{RMat::Zero(K, K), CMat::Zero(K, K), RMat::Zero(K, K)};
    for (std::size_t k = 0; k < topo.node_count(); ++k) {
        const RVec col = rule(k, topo.neighbors(k));
        wm.a_mean.col(static_cast<Eigen::Index>(k)) = col;
    }
    wm.q_mean = wm.a_mean.cast<cplx>();
    return wm;
}

/// Mean matrices of the network error recursion, all MK x MK:
///   A = E{A_i} (x) I_M, Q = E{Q_i} (x) I_M, E = A - Q,
///   B = Q^T (I - M R_u), Rint, Rn, Z block diagonal.
struct MomentMatrices {
    Eigen::Index K = 0;
    Eigen::Index M = 0;
    CMat A, Q, E, B;
    CMat Rint, Rn, Z;
    CMat Mstep, Ru;
};

/// Assembles the recursion matrices. `sigma_i2` and `sigma_n2` are the K x K
/// per-link interference and channel-noise variances.
inline MomentMatrices assemble_moments(const std::vector<NodeStats>& nodes, const WeightMoments& wm,
                                       const RMat& sigma_i2, const RMat& sigma_n2)
{
    const auto K = static_cast<Eigen::Index>(nodes.size());
    require(K > 0, "assemble_moments: no nodes");
    const Eigen::Index M = nodes.front().dim();
    require(wm.a_mean.rows() == K && wm.q_mean.rows() == K && wm.a2g2.rows() == K,
            "assemble_moments: weight moments have the wrong size");
    const Eigen::Index N = M * K;
    const CMat I_M = CMat::Identity(M, M);

    MomentMatrices mm;
    mm.K = K;
    mm.M = M;
    mm.A = kron(wm.a_mean.cast<cplx>(), I_M);
    mm.Q = kron(wm.q_mean, I_M);
    mm.E = mm.A - mm.Q;
    mm.Rint = CMat::Zero(N, N);
    mm.Rn = CMat::Zero(N, N);
    mm.Z = CMat::Zero(N, N);
    mm.Mstep = CMat::Zero(N, N);
    mm.Ru = CMat::Zero(N, N);
    for (Eigen::Index k = 0; k < K; ++k) {
        const NodeStats& s = nodes[static_cast<std::size_t>(k)];
        require(s.dim() == M, "assemble_moments: inconsistent regressor dimensions");
        double ri = 0.0, rn = 0.0;
        for (Eigen::Index l = 0; l < K; ++l) {
            if (l == k)
                continue;
            ri += wm.a2g2(l, k) * sigma_i2(l, k);
            rn += wm.a2g2(l, k) * sigma_n2(l, k);
        }
        mm.Rint.block(k * M, k * M, M, M) = ri * I_M;
        mm.Rn.block(k * M, k * M, M, M) = rn * I_M;
        mm.Z.block(k * M, k * M, M, M) = s.regressor_cov * s.meas_noise_var;
        mm.Mstep.block(k * M, k * M, M, M) = s.step_size * I_M;
        mm.Ru.block(k * M, k * M, M, M) = s.regressor_cov;
    }
    mm.B = mm.Q.transpose() * (CMat::Identity(N, N) - mm.Mstep * mm.Ru);
    return mm;
}

inline MomentMatrices assemble_moments(const ChannelModel& ch, const std::vector<NodeStats>& nodes,
                                       const WeightMoments& wm)
{
    const auto K = static_cast<Eigen::Index>(ch.node_count());
    RMat si = RMat::Zero(K, K), sn = RMat::Zero(K, K);
    for (std::size_t k = 0; k < ch.node_count(); ++k)
        for (std::size_t l : ch.senders(k)) {
            si(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = ch.ini_var(l, k);
            sn(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = ch.noise_var(l, k);
        }
    return assemble_moments(nodes, wm, si, sn);
}

/// w_c^o = 1_K (x) w^o.
inline CVec stack_truth(const CVec& omega, Eigen::Index K)
{
    CVec out(omega.size() * K);
    for (Eigen::Index k = 0; k < K; ++k)
        out.segment(k * omega.size(), omega.size()) = omega;
    return out;
}

// ---------------------------------------------------------------------------
// Mean behaviour
// ---------------------------------------------------------------------------

/// E{w~_i} = B E{w~_i-1} + E^T w_c^o. The transpose matches the per-node
/// combination sum_l e_lk w^o.
inline CVec mean_error_step(const MomentMatrices& mm, const CVec& prev, const CVec& omega_c)
{
    return mm.B * prev + mm.E.transpose() * omega_c;
}

struct MeanErrorLimit {
    CVec value;
    double spectral_radius = 0.0;
    double condition = 0.0;
    bool reliable = true; ///< false when cond(I - B) > 1e12
};

/// (I - B)^-1 E^T w_c^o; empty when rho(B) >= 1.
inline std::optional<MeanErrorLimit> mean_error_limit(const MomentMatrices& mm, const CVec& omega_c)
{
    MeanErrorLimit r;
    r.spectral_radius = spectral_radius(mm.B);
    if (!(r.spectral_radius < 1.0))
        return std::nullopt;
    const Eigen::Index N = mm.B.rows();
    const CMat IB = CMat::Identity(N, N) - mm.B;
    Eigen::JacobiSVD<CMat> svd(IB);
    const auto& sv = svd.singularValues();
    r.condition = sv(0) / sv(sv.size() - 1);
    r.reliable = r.condition <= 1e12;
    r.value = IB.partialPivLu().solve(CVec(mm.E.transpose() * omega_c));
    return r;
}

// ---------------------------------------------------------------------------
// Mean-square behaviour
// ---------------------------------------------------------------------------

/// Hermitian G with Tr(Sigma G) = gamma^T sigma:
///   cross term  B m w_c^* E + (.)^*     (m = E{w~_i-1})
///   bias term   E^T w_c w_c^* E^*T
///   noise       Q^T M Z M Q^*T + Rint + Rn
inline CMat driving_covariance(const MomentMatrices& mm, const CVec& omega_c, const CVec& mean_prev)
{
    const CMat Et = mm.E.transpose();
    const CVec bias = Et * omega_c;
    const CMat cross = (mm.B * mean_prev) * bias.adjoint();
    const CMat Qt = mm.Q.transpose();
    CMat G = Qt * mm.Mstep * mm.Z * mm.Mstep * Qt.adjoint() + mm.Rint + mm.Rn;
    G += bias * bias.adjoint();
    G += cross + cross.adjoint();
    return G;
}

/// gamma = vec(G^T), so that gamma^T vec(Sigma) = Tr(Sigma G).
inline CVec compute_gamma(const MomentMatrices& mm, const CVec& omega_c, const CVec& mean_prev)
{
    return vec(driving_covariance(mm, omega_c, mean_prev).transpose());
}

struct TheoryTrace {
    RMat node;       ///< K x T, eta_k(i) for i = 0..T-1
    RVec network;    ///< T
    double initial = 0.0; ///< eta_k(-1) = ||w^o||^2
    double spectral_radius = 0.0;
};

/// Evaluates the variance recursion with F = B^T (x) B^* from w_k,-1 = 0.
/// F is never formed: the weighted-norm recursion is carried as the error
/// covariance P_i = B P_i-1 B^* + G_i and eta_k(i) = Tr of block k of P_i.
inline TheoryTrace msd_trace(const MomentMatrices& mm, const CVec& omega_c, std::size_t horizon)
{
    if (horizon == 0)
        throw ContractError("msd_trace: horizon must be >= 1");
    const Eigen::Index K = mm.K, M = mm.M;
    TheoryTrace t;
    t.spectral_radius = spectral_radius(mm.B);
    t.node.resize(K, static_cast<Eigen::Index>(horizon));
    t.network.resize(static_cast<Eigen::Index>(horizon));
    t.initial = omega_c.head(M).squaredNorm();

    CVec mean = omega_c;
    CMat P = omega_c * omega_c.adjoint();
    for (std::size_t i = 0; i < horizon; ++i) {
        const CMat G = driving_covariance(mm, omega_c, mean);
        P = mm.B * P * mm.B.adjoint() + G;
        P = 0.5 * (P + P.adjoint()).eval();
        mean = mean_error_step(mm, mean, omega_c);
        for (Eigen::Index k = 0; k < K; ++k)
            t.node(k, static_cast<Eigen::Index>(i)) = P.block(k * M, k * M, M, M).trace().real();
    }
    t.network = t.node.colwise().mean().transpose();
    return t;
}

/// Limit of the network MSD for constant gamma:
/// (1/K) gamma^T (I - F)^-1 vec(I). Materialises F; intended for MK up to ~40.
inline double steady_state_network_msd(const MomentMatrices& mm, const CVec& gamma)
{
    const Eigen::Index N = mm.B.rows();
    const CMat F = kron(CMat(mm.B.transpose()), CMat(mm.B.adjoint()));
    const CMat IF = CMat::Identity(N * N, N * N) - F;
    const CVec sigma = vec(CMat::Identity(N, N));
    const CVec x = IF.partialPivLu().solve(sigma);
    return (gamma.transpose() * x)(0).real() / static_cast<double>(mm.K);
}

/// delta = ||I - M R_u||_{b,inf}.
inline double adaptation_norm(const MomentMatrices& mm)
{
    const Eigen::Index N = mm.Ru.rows();
    return block_max_norm(CMat::Identity(N, N) - mm.Mstep * mm.Ru, mm.M);
}

/// (c^2/K) Tr(A^T M Z M A + Rint + Rn) / (1 - delta^2).
inline double msd_upper_bound(const MomentMatrices& mm, double c, double delta)
{
    if (!(c > 0.0))
        throw ContractError("msd_upper_bound: c must be positive");
    if (!(delta < 1.0) || delta < 0.0)
        throw ContractError("msd_upper_bound: requires 0 <= delta < 1");
    const CMat At = mm.A.transpose();
    const double tr = (At * mm.Mstep * mm.Z * mm.Mstep * At.adjoint() + mm.Rint + mm.Rn).trace().real();
    return c * c / static_cast<double>(mm.K) * tr / (1.0 - delta * delta);
}

inline double msd_upper_bound(const MomentMatrices& mm, std::optional<double> c = std::nullopt)
{
    return msd_upper_bound(mm, c.value_or(static_cast<double>(mm.M * mm.K)), adaptation_norm(mm));
}

// ---------------------------------------------------------------------------
// Instantaneous global recursion
// ---------------------------------------------------------------------------

/// One realization of the quantities driving the stacked error recursion.
struct GlobalDraws {
    RMat A;               ///< K x K weights A_i
    CMat Q;               ///< K x K, q_lk(i)
    std::vector<CMat> Ru; ///< u_k^* u_k per node
    CVec z;               ///< col{u_k^* v_k}
    CVec ini;             ///< col{sum_l a_lk g_lk i_lk}
    CVec noise;           ///< col{sum_l a_lk g_lk n_lk}
};

/// w~_i = B_i w~_i-1 - Q_i^T M z_i + E_i^T w_c^o - i_i - n_i,
/// B_i = Q_i^T (I - M R_u,i), E_i = A_i - Q_i (both expanded with I_M).
inline CVec global_error_step(const CVec& prev, const GlobalDraws& d, const std::vector<double>& step_sizes,
                              const CVec& omega_c)
{
    const auto K = static_cast<Eigen::Index>(step_sizes.size());
    require(K > 0 && static_cast<Eigen::Index>(d.Ru.size()) == K, "global_error_step: wrong node count");
    const Eigen::Index M = d.Ru.front().rows();
    const Eigen::Index N = M * K;
    require(prev.size() == N && d.z.size() == N && d.ini.size() == N && d.noise.size() == N && omega_c.size() == N,
            "global_error_step: dimension mismatch");
    require(d.A.rows() == K && d.Q.rows() == K, "global_error_step: weight matrices have the wrong size");

    // Blockwise evaluation of the expanded products.
    CVec adapted(N);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double mu = step_sizes[static_cast<std::size_t>(k)];
        adapted.segment(k * M, M) = prev.segment(k * M, M) - mu * d.Ru[static_cast<std::size_t>(k)] * prev.segment(k * M, M)
                                    - mu * d.z.segment(k * M, M);
    }
    CVec out = CVec::Zero(N);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < K; ++l) {
            const cplx q = d.Q(l, k);
            const cplx e = d.A(l, k) - q;
            if (q != cplx{})
                out.segment(k * M, M) += q * adapted.segment(l * M, M);
            if (e != cplx{})
                out.segment(k * M, M) += e * omega_c.segment(l * M, M);
        }
    return out - d.ini - d.noise;
}

} // namespace dlms

#endif // DLMS_PERFORMANCE_THEORY_HPP
