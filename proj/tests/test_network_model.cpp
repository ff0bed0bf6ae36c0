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
#include <set>

#include "network_model.hpp"

using namespace dlms;
using nlohmann::json;

TEST_CASE("single node is its own only neighbour", "[topology]")
{
    const auto t = generate_topology(11, 1, 0.5, 1.0);
    REQUIRE(t.node_count() == 1);
    REQUIRE(t.neighbors(0) == std::vector<std::size_t>{0});
    REQUIRE(t.max_degree() == 1);
}

TEST_CASE("two nodes inside the range see each other", "[topology]")
{
    const auto t = NetworkTopology::from_positions({{0.1, 0.1}, {0.4, 0.1}}, 0.5);
    REQUIRE(t.distance(0, 1) == Catch::Approx(0.3).epsilon(1e-12));
    REQUIRE(t.neighbors(0) == std::vector<std::size_t>{0, 1});
    REQUIRE(t.neighbors(1) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("two nodes outside the range are isolated", "[topology]")
{
    const auto t = NetworkTopology::from_positions({{0.0, 0.0}, {0.9, 0.0}}, 0.5);
    REQUIRE(t.neighbors(0) == std::vector<std::size_t>{0});
    REQUIRE_FALSE(t.is_neighbor(1, 0));
}

TEST_CASE("generated neighbourhoods match a brute-force distance check", "[topology]")
{
    for (std::uint64_t seed : {1u, 2u, 3u, 42u, 2026u}) {
        const auto t = generate_topology(seed, 10, 0.5, 1.0);
        REQUIRE(t.node_count() == 10);
        const auto& p = t.positions();
        for (std::size_t k = 0; k < 10; ++k) {
            REQUIRE(p[k].x >= 0.0);
            REQUIRE(p[k].x <= 1.0);
            REQUIRE(p[k].y >= 0.0);
            REQUIRE(p[k].y <= 1.0);
            std::set<std::size_t> expect;
            for (std::size_t l = 0; l < 10; ++l) {
                const double dx = p[l].x - p[k].x, dy = p[l].y - p[k].y;
                if (l == k || std::sqrt(dx * dx + dy * dy) <= 0.5)
                    expect.insert(l);
            }
            const auto& nb = t.neighbors(k);
            REQUIRE(std::set<std::size_t>(nb.begin(), nb.end()) == expect);
            REQUIRE(std::is_sorted(nb.begin(), nb.end()));
            for (std::size_t l : nb)
                REQUIRE(t.is_neighbor(k, l));
        }
    }
}

TEST_CASE("generation is reproducible from the seed", "[topology]")
{
    const auto a = generate_topology(5, 8, 0.4);
    const auto b = generate_topology(5, 8, 0.4);
    const auto c = generate_topology(6, 8, 0.4);
    REQUIRE(topology_to_json(a) == topology_to_json(b));
    REQUIRE(topology_to_json(a) != topology_to_json(c));
}

TEST_CASE("generated nodes never collide", "[topology]")
{
    const auto t = generate_topology(3, 50, 0.2);
    for (std::size_t l = 0; l < 50; ++l)
        for (std::size_t k = l + 1; k < 50; ++k)
            REQUIRE(t.distance(l, k) >= kMinSeparation);
}

TEST_CASE("generation rejects invalid arguments", "[topology]")
{
    REQUIRE_THROWS_AS(generate_topology(1, 0, 0.5), ContractError);
    REQUIRE_THROWS_AS(generate_topology(1, 3, 0.0), ContractError);
    REQUIRE_THROWS_AS(generate_topology(1, 3, 0.5, -1.0), ContractError);
}

TEST_CASE("coincident nodes in a document are accepted", "[topology]")
{
    const json doc = {{"r_o", 0.5}, {"positions", {{0.2, 0.2}, {0.2, 0.2}}}};
    const auto t = load_topology(doc);
    REQUIRE(t.distance(0, 1) == 0.0);
    REQUIRE(t.is_neighbor(0, 1));
    REQUIRE(t.is_neighbor(1, 0));
}

TEST_CASE("a ten-node document with range 0.5 loads", "[topology]")
{
    json pos = json::array();
    for (int i = 0; i < 10; ++i)
        pos.push_back({{"id", 9 - i}, {"x", 0.1 * i}, {"y", 0.05 * i}});
    const auto t = load_topology({{"r_o", 0.5}, {"positions", pos}});
    REQUIRE(t.node_count() == 10);
    REQUIRE(t.tx_range() == 0.5);
    REQUIRE(t.positions()[9].x == 0.0);
    REQUIRE(t.positions()[0].x == Catch::Approx(0.9));
    for (std::size_t k = 0; k < 10; ++k)
        REQUIRE(t.is_neighbor(k, k));
}

TEST_CASE("document validation names the offending field", "[topology]")
{
    const auto path_of = [](const json& doc) {
        try {
            (void)load_topology(doc);
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string("<no error>");
    };
    REQUIRE(path_of({{"positions", {{0.1, 0.1}}}}) == "topology.r_o");
    REQUIRE(path_of({{"r_o", -1.0}, {"positions", {{0.1, 0.1}}}}) == "topology.r_o");
    REQUIRE(path_of({{"r_o", 0.5}}) == "topology.positions");
    REQUIRE(path_of({{"r_o", 0.5}, {"positions", {{1.5, 0.1}}}}) == "topology.positions[0]");
    REQUIRE(path_of({{"r_o", 0.5}, {"positions", {{{"id", 0}, {"x", 0.1}, {"y", 0.1}}, {{"id", 0}, {"x", 0.2}, {"y", 0.1}}}}}) ==
            "topology.positions[1].id");
    REQUIRE(path_of({{"r_o", 0.5}, {"positions", {{{"id", 5}, {"x", 0.1}, {"y", 0.1}}}}}) == "topology.positions[0].id");
    REQUIRE(path_of({{"r_o", 0.5}, {"positions", {"abc"}}}) == "topology.positions[0]");
}

TEST_CASE("region side widens the admissible area", "[topology]")
{
    const json doc = {{"r_o", 1.0}, {"region_side", 2.0}, {"positions", {{1.5, 1.9}, {0.0, 0.0}}}};
    const auto t = load_topology(doc);
    REQUIRE(t.region_side() == 2.0);
    REQUIRE_FALSE(t.is_neighbor(0, 1));
}

TEST_CASE("topology survives a JSON round trip", "[topology]")
{
    const auto a = generate_topology(9, 12, 0.3);
    const auto b = load_topology(topology_to_json(a));
    REQUIRE(b.node_count() == a.node_count());
    for (std::size_t k = 0; k < a.node_count(); ++k)
        REQUIRE(a.neighbors(k) == b.neighbors(k));
    REQUIRE((a.distances() - b.distances()).cwiseAbs().maxCoeff() == 0.0);
}
