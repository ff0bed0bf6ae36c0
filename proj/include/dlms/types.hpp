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

#ifndef DLMS_TYPES_HPP
#define DLMS_TYPES_HPP

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dlms {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CRow = Eigen::RowVectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Random engine used everywhere. One instance per trial / per Monte Carlo job.
using Rng = std::mt19937_64;

/// Raised when a caller breaks a documented precondition (bad index, weights
/// that do not sum to one, a zero channel handed to the ZF equalizer, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised for malformed input documents. `path()` names the offending field,
/// e.g. "channel.fading_var[2][3]".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

inline void require(bool cond, const char* msg)
{
    if (!cond)
        throw ContractError(msg);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`. Distinct `tag`s give unrelated families.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag = 0)
{
    return splitmix64(splitmix64(master ^ splitmix64(tag)) + index);
}

/// Zero-mean circular complex Gaussian with E|x|^2 = variance
/// (real and imaginary parts each N(0, variance/2)).
inline cplx complex_normal(Rng& rng, double variance)
{
    if (variance <= 0.0)
        return {0.0, 0.0};
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline void fill_complex_normal(Rng& rng, Eigen::Ref<CVec> out, double variance)
{
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = complex_normal(rng, variance);
}

} // namespace dlms

#endif // DLMS_TYPES_HPP
