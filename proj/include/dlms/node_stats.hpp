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

#ifndef DLMS_NODE_STATS_HPP
#define DLMS_NODE_STATS_HPP

#include <cmath>

#include "types.hpp"

namespace dlms {

/// Per-node second-order statistics: step size mu_k, measurement noise
/// variance sigma_v,k^2 and regressor covariance R_u,k (M x M Hermitian PSD).
struct NodeStats {
    double step_size = 0.01;
    double meas_noise_var = 0.0;
    CMat regressor_cov;

    Eigen::Index dim() const { return regressor_cov.rows(); }
    double trace_ru() const { return regressor_cov.trace().real(); }

    double lambda_max() const
    {
        Eigen::SelfAdjointEigenSolver<CMat> es(regressor_cov, Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }

    void validate() const
    {
        require(step_size > 0.0, "node: step_size must be positive");
        require(meas_noise_var >= 0.0, "node: meas_noise_var must be >= 0");
        require(regressor_cov.rows() > 0 && regressor_cov.rows() == regressor_cov.cols(),
                "node: regressor_cov must be square and non-empty");
        const double scale = std::max(1.0, regressor_cov.cwiseAbs().maxCoeff());
        require((regressor_cov - regressor_cov.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                "node: regressor_cov must be Hermitian");
        Eigen::SelfAdjointEigenSolver<CMat> es(regressor_cov, Eigen::EigenvaluesOnly);
        require(es.eigenvalues().minCoeff() >= -1e-12 * scale, "node: regressor_cov must be PSD");
    }

    /// Factor L with L L^* = R_u, valid for singular R_u as well.
    CMat sampling_factor() const
    {
        Eigen::SelfAdjointEigenSolver<CMat> es(regressor_cov);
        RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return es.eigenvectors() * ev.asDiagonal();
    }

    static NodeStats isotropic(Eigen::Index M, double step_size, double meas_noise_var, double ru_scale = 1.0)
    {
        NodeStats s;
        s.step_size = step_size;
        s.meas_noise_var = meas_noise_var;
        s.regressor_cov = CMat::Identity(M, M) * ru_scale;
        return s;
    }
};

} // namespace dlms

#endif // DLMS_NODE_STATS_HPP
