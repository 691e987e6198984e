// Copyright (C) 2026 The hart-trace Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include "hart/ablation.hpp"
#include "hart/annotate.hpp"
#include "hart/binio.hpp"
#include "hart/classify.hpp"
#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/evaluation.hpp"
#include "hart/manifest.hpp"
#include "hart/parallel.hpp"
#include "hart/remote.hpp"
#include "hart/retrieval.hpp"
#include "hart/rng.hpp"
#include "hart/synth.hpp"
#include "hart/text.hpp"
#include "hart/trace.hpp"
#include "hart/vindex.hpp"
