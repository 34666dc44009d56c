// Copyright 2026 The sf2lab Authors.
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

#ifndef SF2_SF2_HPP
#define SF2_SF2_HPP

#include "sf2/checkpoint.hpp"
#include "sf2/config.hpp"
#include "sf2/core.hpp"
#include "sf2/data.hpp"
#include "sf2/error.hpp"
#include "sf2/eval.hpp"
#include "sf2/gradcheck.hpp"
#include "sf2/io.hpp"
#include "sf2/losses.hpp"
#include "sf2/model.hpp"
#include "sf2/rng.hpp"
#include "sf2/train.hpp"

#endif  // SF2_SF2_HPP
