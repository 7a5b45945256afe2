/*
 * Copyright (c) 2026, the semblance-kit authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "semblance/common.hpp"
#include "semblance/comparators.hpp"
#include "semblance/feature_index.hpp"
#include "semblance/io.hpp"
#include "semblance/kernel.hpp"
#include "semblance/kpca.hpp"
#include "semblance/psd.hpp"
#include "semblance/simulation.hpp"
#include "semblance/svm.hpp"
#include "semblance/types.hpp"
