// Copyright 2026 The hsmm Authors.
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

#include "hsmm/common.hpp"
#include "hsmm/model.hpp"
#include "hsmm/rng.hpp"
#include "hsmm/simulate.hpp"
#include "hsmm/embedding.hpp"
#include "hsmm/filter.hpp"
#include "hsmm/smoother.hpp"
#include "hsmm/estimate.hpp"
#include "hsmm/io.hpp"
