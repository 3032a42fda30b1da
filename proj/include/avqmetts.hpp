// Copyright 2026 The avqmetts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Umbrella header.
 */

#pragma once

#include "avqmetts/analysis.hpp"
#include "avqmetts/avqite.hpp"
#include "avqmetts/commands.hpp"
#include "avqmetts/config.hpp"
#include "avqmetts/ed.hpp"
#include "avqmetts/error.hpp"
#include "avqmetts/io.hpp"
#include "avqmetts/magnetization.hpp"
#include "avqmetts/metts.hpp"
#include "avqmetts/model.hpp"
#include "avqmetts/pauli.hpp"
#include "avqmetts/state.hpp"
