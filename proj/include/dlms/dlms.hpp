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

#ifndef DLMS_DLMS_HPP
#define DLMS_DLMS_HPP

#include "combination.hpp"
#include "dlms_engine.hpp"
#include "experiment.hpp"
#include "network_model.hpp"
#include "node_stats.hpp"
#include "performance_theory.hpp"
#include "types.hpp"
#include "wireless_channel.hpp"

#endif // DLMS_DLMS_HPP
