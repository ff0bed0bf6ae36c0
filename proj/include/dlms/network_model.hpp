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

#ifndef DLMS_NETWORK_MODEL_HPP
#define DLMS_NETWORK_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "types.hpp"

namespace dlms {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Static geometry of the network: positions, pairwise distances and the
/// transmission-range neighbourhoods N_k (each containing k itself).
/// Immutable after construction.
class NetworkTopology {
public:
    NetworkTopology() = default;

    /// Builds distances and neighbour sets from explicit coordinates.
    /// Coincident nodes are allowed here; the channel rejects them later.
    static NetworkTopology from_positions(std::vector<Point> positions, double tx_range,
                                          double region_side = 1.0)
    {
        if (positions.empty())
            throw ContractError("topology: node_count must be >= 1");
        if (!(tx_range > 0.0) || !std::isfinite(tx_range))
            throw ContractError("topology: tx_range must be positive");
        if (!(region_side > 0.0))
            throw ContractError("topology: region_side must be positive");

        NetworkTopology t;
        t.positions_ = std::move(positions);
        t.tx_range_ = tx_range;
        t.region_side_ = region_side;
        const auto n = t.positions_.size();
        t.dist_ = RMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t k = l + 1; k < n; ++k) {
                const double d = std::hypot(t.positions_[l].x - t.positions_[k].x,
                                            t.positions_[l].y - t.positions_[k].y);
                t.dist_(l, k) = d;
                t.dist_(k, l) = d;
            }
        t.neighbors_.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l)
                if (l == k || t.dist_(l, k) <= tx_range)
                    t.neighbors_[k].push_back(l);
        return t;
    }

    std::size_t node_count() const noexcept { return positions_.size(); }
    const std::vector<Point>& positions() const noexcept { return positions_; }
    const RMat& distances() const noexcept { return dist_; }
    double distance(std::size_t l, std::size_t k) const { return dist_(l, k); }
    double tx_range() const noexcept { return tx_range_; }
    double region_side() const noexcept { return region_side_; }

    /// Sorted ascending; always contains k.
    const std::vector<std::size_t>& neighbors(std::size_t k) const { return neighbors_.at(k); }

    bool is_neighbor(std::size_t l, std::size_t k) const
    {
        const auto& n = neighbors_.at(k);
        return std::binary_search(n.begin(), n.end(), l);
    }

    std::size_t max_degree() const
    {
        std::size_t m = 0;
        for (const auto& n : neighbors_)
            m = std::max(m, n.size());
        return m;
    }

private:
    std::vector<Point> positions_;
    RMat dist_;
    double tx_range_ = 0.0;
    double region_side_ = 1.0;
    std::vector<std::vector<std::size_t>> neighbors_;
};

inline constexpr double kMinSeparation = 1e-6;

/// Uniform i.i.d. placement in [0, side]^2. A node closer than 1e-6 to an
/// already placed node is re-drawn.
inline NetworkTopology generate_topology(std::uint64_t seed, std::size_t node_count, double tx_range,
                                         double region_side = 1.0)
{
    if (node_count == 0)
        throw ContractError("generate_topology: node_count must be >= 1");
    if (!(tx_range > 0.0))
        throw ContractError("generate_topology: tx_range must be positive");
    if (!(region_side > 0.0))
        throw ContractError("generate_topology: region_side must be positive");

    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, region_side);
    std::vector<Point> pts;
    pts.reserve(node_count);
    while (pts.size() < node_count) {
        Point p{u(rng), u(rng)};
        const bool collides = std::any_of(pts.begin(), pts.end(), [&](const Point& q) {
            return std::hypot(p.x - q.x, p.y - q.y) < kMinSeparation;
        });
        if (!collides)
            pts.push_back(p);
    }
    return NetworkTopology::from_positions(std::move(pts), tx_range, region_side);
}

/// Topology document: { "r_o": real, "positions": [[x,y], ...] } with an
/// optional "region_side" (default 1). Entries may also be objects
/// {"id": i, "x": .., "y": ..} with 0-based ids forming a permutation.
inline NetworkTopology load_topology(const nlohmann::json& doc, const std::string& path = "topology")
{
    if (!doc.is_object())
        throw ConfigError(path, "expected an object");
    if (!doc.contains("r_o"))
        throw ConfigError(path + ".r_o", "missing");
    if (!doc["r_o"].is_number())
        throw ConfigError(path + ".r_o", "expected a number");
    const double r_o = doc["r_o"].get<double>();
    if (!(r_o > 0.0))
        throw ConfigError(path + ".r_o", "must be positive");

    double side = 1.0;
    if (doc.contains("region_side")) {
        if (!doc["region_side"].is_number() || !(doc["region_side"].get<double>() > 0.0))
            throw ConfigError(path + ".region_side", "expected a positive number");
        side = doc["region_side"].get<double>();
    }

    if (!doc.contains("positions"))
        throw ConfigError(path + ".positions", "missing");
    const auto& arr = doc["positions"];
    if (!arr.is_array() || arr.empty())
        throw ConfigError(path + ".positions", "expected a non-empty array");

    const std::size_t n = arr.size();
    std::vector<std::optional<Point>> slots(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string p = path + ".positions[" + std::to_string(i) + "]";
        const auto& e = arr[i];
        std::size_t id = i;
        Point pt;
        if (e.is_array()) {
            if (e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError(p, "expected [x, y]");
            pt = {e[0].get<double>(), e[1].get<double>()};
        } else if (e.is_object()) {
            if (!e.contains("id") || !e["id"].is_number_integer() || e["id"].get<long long>() < 0)
                throw ConfigError(p + ".id", "expected a non-negative integer");
            if (!e.contains("x") || !e.contains("y") || !e["x"].is_number() || !e["y"].is_number())
                throw ConfigError(p, "expected numeric x and y");
            id = static_cast<std::size_t>(e["id"].get<long long>());
            pt = {e["x"].get<double>(), e["y"].get<double>()};
        } else {
            throw ConfigError(p, "expected [x, y] or {id, x, y}");
        }
        if (id >= n)
            throw ConfigError(p + ".id", "node index out of range");
        if (slots[id])
            throw ConfigError(p + ".id", "duplicate node index " + std::to_string(id));
        if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || pt.x < 0.0 || pt.y < 0.0 || pt.x > side ||
            pt.y > side)
            throw ConfigError(p, "position outside the declared region [0, " + std::to_string(side) + "]^2");
        slots[id] = pt;
    }
    std::vector<Point> pts;
    pts.reserve(n);
    for (auto& s : slots)
        pts.push_back(*s);
    return NetworkTopology::from_positions(std::move(pts), r_o, side);
}

inline nlohmann::json topology_to_json(const NetworkTopology& t)
{
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& p : t.positions())
        pos.push_back({p.x, p.y});
    return {{"r_o", t.tx_range()}, {"region_side", t.region_side()}, {"positions", std::move(pos)}};
}

} // namespace dlms

#endif // DLMS_NETWORK_MODEL_HPP
