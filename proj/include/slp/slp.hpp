// SPDX-License-Identifier: Apache-2.0
//
// slp-mimo: symbol-level precoding and MLD receivers for MU-MIMO downlink
// Copyright (C) 2026 The slp-mimo authors
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

#ifndef SLP_SLP_HPP
#define SLP_SLP_HPP

#include "slp/channel.hpp"
#include "slp/common.hpp"
#include "slp/constellation.hpp"
#include "slp/detection.hpp"
#include "slp/linalg.hpp"
#include "slp/precoding.hpp"
#include "slp/qp.hpp"
#include "slp/sim.hpp"
#include "slp/solvers.hpp"

#endif
