// Copyright 2026 The s2l Authors.
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

#include "s2l/error.hpp"
#include "s2l/evaluate.hpp"
#include "s2l/lm.hpp"
#include "s2l/match.hpp"
#include "s2l/pipeline.hpp"
#include "s2l/remote.hpp"
#include "s2l/search.hpp"
#include "s2l/tabular.hpp"
#include "s2l/templates.hpp"
