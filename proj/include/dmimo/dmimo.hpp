// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The dmimo Authors
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

#ifndef DMIMO_DMIMO_HPP
#define DMIMO_DMIMO_HPP

#include "dmimo/channel.hpp"
#include "dmimo/config.hpp"
#include "dmimo/estimation.hpp"
#include "dmimo/geometry.hpp"
#include "dmimo/network.hpp"
#include "dmimo/precoding.hpp"
#include "dmimo/random.hpp"
#include "dmimo/runner.hpp"
#include "dmimo/units.hpp"

#endif  // DMIMO_DMIMO_HPP
