// Copyright 2026 The vpcorch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "vpcorch/bench.hpp"
#include "vpcorch/checker.hpp"
#include "vpcorch/config_io.hpp"
#include "vpcorch/digest.hpp"
#include "vpcorch/domain.hpp"
#include "vpcorch/json_codec.hpp"
#include "vpcorch/node_runtime.hpp"
#include "vpcorch/orchestrator.hpp"
#include "vpcorch/port.hpp"
#include "vpcorch/process_endpoint.hpp"
#include "vpcorch/scenario.hpp"
#include "vpcorch/session.hpp"
#include "vpcorch/simnet.hpp"
#include "vpcorch/stats.hpp"
#include "vpcorch/trace_io.hpp"
#include "vpcorch/types.hpp"
#include "vpcorch/vpf_catalog.hpp"
#include "vpcorch/vpf_registry.hpp"
#include "vpcorch/wire.hpp"
