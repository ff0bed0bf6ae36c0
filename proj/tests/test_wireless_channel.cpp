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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "wireless_channel.hpp"

using namespace dlms;
using Catch::Approx;

namespace {

NetworkTopology line(std::vector<double> xs, double range)
{
    std::vector<Point> p;
    for (double x : xs)
        p.push_back({x, 0.0});
    return NetworkTopology::from_positions(p, range);
}

} // namespace

TEST_CASE("beta scales the fading draw by the path loss", "[channel]")
{
    const cplx b = beta_from_fading({1.0, 0.0}, 1.0, 0.25, 2.0);
    REQUIRE(b.real() == Approx(4.0).epsilon(1e-14));
    REQUIRE(b.imag() == 0.0);
}

TEST_CASE("zero fading variance gives a zero beta", "[channel]")
{
    const auto t = line({0.0, 0.3}, 0.5);
    auto p = ChannelParams::uniform(2, 1.0, 2.5, 0.0, 0.0, 0.1);
    Rng rng(1);
    for (int i = 0; i < 100; ++i)
        REQUIRE(draw_beta(p, t, 0, 1, rng) == cplx{0.0, 0.0});
}

TEST_CASE("sample variance of beta matches the link variance", "[channel]")
{
    const auto t = line({0.0, 0.4}, 0.5);
    const auto p = ChannelParams::uniform(2, 1.0, 2.5, 1.0, 0.0, 0.1);
    const double expect = 1.0 * 1.0 / std::pow(0.4, 2.5);
    REQUIRE(beta_variance(p, t, 0, 1) == Approx(expect).epsilon(1e-12));
    Rng rng(7);
    const int n = 100000;
    cplx mean{};
    double pow2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx b = draw_beta(p, t, 0, 1, rng);
        mean += b;
        pow2 += std::norm(b);
    }
    mean /= double(n);
    const double var = pow2 / n - std::norm(mean);
    REQUIRE(std::abs(var - expect) / expect < 0.03);
    REQUIRE(std::abs(mean) < 0.05 * std::sqrt(expect));
}

TEST_CASE("interference variance with no third neighbour is zero", "[channel]")
{
    const auto t = line({0.0, 0.3}, 0.5);
    const auto p = ChannelParams::uniform(2, 1.0, 2.5, 1.0, 0.0, 0.1);
    REQUIRE(ini_variance(p, t, 0, 1) == 0.0);
}

TEST_CASE("interference variance with one unit-distance interferer", "[channel]")
{
    // node 1 receives from 0 (distance 0.5) and 2 (distance 1)
    const auto t = line({0.5, 1.0, 2.0}, 1.0);
    const auto p = ChannelParams::uniform(3, 1.0, 2.5, 1.0, 0.0, 0.1);
    REQUIRE(ini_variance(p, t, 0, 1) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("interference variance equals a re-summation over the neighbourhood", "[channel]")
{
    const auto t = generate_topology(17, 10, 0.5);
    auto p = ChannelParams::uniform(10, 1.3, 2.5, 1.0, 0.0, 0.1);
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (Eigen::Index i = 0; i < p.fading_var.size(); ++i)
        p.fading_var.data()[i] = u(rng);
    for (std::size_t k = 0; k < 10; ++k)
        for (std::size_t l : t.neighbors(k)) {
            double s = 0.0;
            for (std::size_t m = 0; m < 10; ++m) {
                if (m == k || m == l || t.distance(m, k) > 0.5)
                    continue;
                s += p.fading_var(m, k) * 1.3 / std::pow(t.distance(m, k), 2.5);
            }
            REQUIRE(ini_variance(p, t, l, k) == Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("interference superposition", "[channel]")
{
    SECTION("no interferers")
    {
        std::map<std::size_t, CVec> tx{{1, CVec::Ones(2)}};
        std::map<std::size_t, cplx> b{{1, {1.0, 0.0}}};
        REQUIRE(draw_ini(tx, b, 0, 1, 2).norm() == 0.0);
    }
    SECTION("one interferer")
    {
        CVec psi(2);
        psi << cplx(1, 0), cplx(0, 1);
        std::map<std::size_t, CVec> tx{{1, CVec::Ones(2)}, {2, psi}};
        std::map<std::size_t, cplx> b{{1, {5.0, 0.0}}, {2, {2.0, 0.0}}};
        const CVec i = draw_ini(tx, b, 0, 1, 2);
        REQUIRE(i[0] == cplx(2, 0));
        REQUIRE(i[1] == cplx(0, 2));
    }
    SECTION("three interferers")
    {
        Rng rng(5);
        std::map<std::size_t, CVec> tx;
        std::map<std::size_t, cplx> b;
        for (std::size_t s = 1; s <= 4; ++s) {
            CVec v(3);
            fill_complex_normal(rng, v, 1.0);
            tx[s] = v;
            b[s] = complex_normal(rng, 1.0);
        }
        const CVec got = draw_ini(tx, b, 0, 2, 3);
        for (Eigen::Index m = 0; m < 3; ++m) {
            const cplx e = b[1] * tx[1][m] + b[3] * tx[3][m] + b[4] * tx[4][m];
            REQUIRE(std::abs(got[m] - e) < 1e-14);
        }
    }
}

TEST_CASE("signal to interference plus noise ratio", "[channel]")
{
    REQUIRE(compute_sinr({{1, {1.0, 0.0}}}, 1, 1.0) == Approx(1.0));
    REQUIRE(compute_sinr({{1, {2.0, 0.0}}, {2, {0.0, std::sqrt(2.0)}}}, 1, 2.0) == Approx(1.0));
    REQUIRE(std::isinf(compute_sinr({{1, {1.0, 0.0}}}, 1, 0.0)));
    REQUIRE_THROWS_AS(compute_sinr({{1, {1.0, 0.0}}}, 3, 0.0), ContractError);
}

TEST_CASE("gating at a -10 dB threshold", "[channel]")
{
    const double th = db_to_linear(-10.0);
    REQUIRE(th == Approx(0.1).epsilon(1e-14));
    REQUIRE(gate_links({{1, 0.09}}, th, 0) == std::vector<std::size_t>{0});
    REQUIRE(gate_links({{1, 0.11}}, th, 0) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("gating edge cases", "[channel]")
{
    const std::map<std::size_t, double> s{{0, 0.01}, {2, 0.02}, {5, 0.05}};
    REQUIRE(gate_links(s, 1.0, 3) == std::vector<std::size_t>{3});
    REQUIRE(gate_links(s, 0.0, 3) == std::vector<std::size_t>{0, 2, 3, 5});

    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::map<std::size_t, double> m;
        for (std::size_t l = 1; l < 8; ++l)
            m[l] = u(rng);
        const double th = u(rng);
        std::vector<std::size_t> expect{0};
        for (auto [l, v] : m)
            if (v >= th)
                expect.push_back(l);
        REQUIRE(gate_links(m, th, 0) == expect);
    }
}

TEST_CASE("zero-forcing gain inverts beta", "[equalizer]")
{
    REQUIRE(zf_gain({2.0, 0.0}) == cplx(0.5, 0.0));
    REQUIRE(std::abs(zf_gain({0.0, 1.0}) - cplx(0.0, -1.0)) < 1e-15);
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const cplx b = complex_normal(rng, 3.0);
        REQUIRE(std::abs(zf_gain(b) * b - 1.0) < 1e-12);
    }
    REQUIRE_THROWS_AS(zf_gain({0.0, 0.0}), ContractError);
}

TEST_CASE("MMSE gain", "[equalizer]")
{
    REQUIRE(mmse_gain({1.0, 0.0}, 0.5, 0.5) == cplx(0.5, 0.0));
    REQUIRE(std::abs(mmse_gain({2.0, 0.0}, 1.0, 1.0) - 1.0 / 3.0) < 1e-15);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const cplx b = complex_normal(rng, 1.0);
        REQUIRE(std::abs(mmse_gain(b, 0.0, 0.0) - zf_gain(b)) < 1e-12 * std::abs(zf_gain(b)));
    }
}

TEST_CASE("no equalization passes the signal through", "[equalizer]")
{
    REQUIRE(equalizer_gain(Equalizer::none, {0.3, 0.4}, 1.0, 1.0) == cplx(1.0, 0.0));
    REQUIRE(parse_equalizer("zf") == Equalizer::zf);
    REQUIRE(parse_equalizer("MMSE") == Equalizer::mmse);
    REQUIRE_THROWS_AS(parse_equalizer("rake"), ConfigError);
}

TEST_CASE("receiver gating treats every other sender as interference", "[channel]")
{
    const auto t = line({0.0, 0.2, 0.4}, 0.5);
    const ChannelModel ch(ChannelParams::uniform(3, 1.0, 2.0, 1.0, 0.5, 0.1), t);
    ChannelModel::ReceiverDraw d;
    d.beta = {cplx(1.0, 0.0), cplx(0.0, 2.0)};
    ch.evaluate_receiver(1, Equalizer::zf, d);
    REQUIRE(ch.senders(1) == std::vector<std::size_t>{0, 2});
    REQUIRE(d.sinr[0] == Approx(1.0 / 4.5));
    REQUIRE(d.sinr[1] == Approx(4.0 / 1.5));
    REQUIRE(d.active[0] == 1);
    REQUIRE(std::abs(d.gain[1] * d.beta[1] - 1.0) < 1e-15);

    d.beta = {cplx(0.1, 0.0), cplx(0.0, 2.0)};
    ch.evaluate_receiver(1, Equalizer::zf, d);
    REQUIRE(d.active[0] == 0);
    REQUIRE(d.gain[0] == cplx(0.0, 0.0));
}

TEST_CASE("link moments: zero threshold activates every link", "[moments]")
{
    const auto t = generate_topology(4, 6, 0.6);
    const ChannelModel ch(ChannelParams::uniform(6, 1.0, 2.5, 1.0, 0.01, 0.0), t);
    Rng rng(1);
    const auto m = estimate_link_moments(ch, Equalizer::zf, uniform_nominal_weights(t), 2000, rng);
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t l : ch.senders(k)) {
            REQUIRE(m.at(l, k).succ_prob == 1.0);
            REQUIRE(std::abs(m.at(l, k).gain_beta_mean - 1.0) < 1e-12);
        }
}

TEST_CASE("link moments: a dead link never succeeds", "[moments]")
{
    const auto t = line({0.0, 0.3, 0.6}, 0.5);
    auto p = ChannelParams::uniform(3, 1.0, 2.5, 1.0, 0.01, 0.1);
    p.fading_var(0, 1) = 0.0;
    const ChannelModel ch(p, t);
    Rng rng(1);
    const auto m = estimate_link_moments(ch, Equalizer::mmse, uniform_nominal_weights(t), 5000, rng);
    REQUIRE(m.at(0, 1).succ_prob == 0.0);
    REQUIRE_FALSE(m.at(0, 1).available);
    REQUIRE(m.at(2, 1).succ_prob > 0.0);
}

TEST_CASE("link success probability is repeatable across independent runs", "[moments]")
{
    const auto t = generate_topology(7, 10, 0.5);
    const ChannelModel ch(ChannelParams::uniform(10, 1.0, 2.5, 1.0, 0.01, 0.1), t);
    Rng r1(derive_seed(1, 0)), r2(derive_seed(2, 0));
    const auto z = uniform_nominal_weights(t);
    const auto a = estimate_link_moments(ch, Equalizer::zf, z, 100000, r1);
    const auto b = estimate_link_moments(ch, Equalizer::zf, z, 100000, r2);
    for (std::size_t k = 0; k < 10; ++k)
        for (std::size_t l : ch.senders(k))
            REQUIRE(std::abs(a.at(l, k).succ_prob - b.at(l, k).succ_prob) <= 0.02);
}

TEST_CASE("single-interferer success probability matches the closed form", "[moments]")
{
    // Two Rayleigh senders into node 1, no noise: SINR = X/Y with X, Y
    // exponential of means s0, s2, so P(X >= t Y) = s0 / (s0 + t s2).
    const auto t = line({0.0, 0.3, 0.7}, 0.5);
    const auto p = ChannelParams::uniform(3, 1.0, 2.5, 1.0, 0.0, 0.5);
    const ChannelModel ch(p, t);
    const double s0 = ch.beta_var(0, 1), s2 = ch.beta_var(2, 1);
    Rng rng(11);
    const auto m = estimate_link_moments(ch, Equalizer::zf, uniform_nominal_weights(t), 100000, rng);
    REQUIRE(m.at(0, 1).succ_prob == Approx(s0 / (s0 + 0.5 * s2)).margin(0.005));
    REQUIRE(m.at(2, 1).succ_prob == Approx(s2 / (s2 + 0.5 * s0)).margin(0.005));
}
