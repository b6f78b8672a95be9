/*
 Copyright 2026 The jcc-control authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstddef>
#include <functional>

namespace jcc {

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// default (hardware concurrency). Honors the JCC_THREADS environment
/// variable until an explicit cap is set.
void set_max_threads(int n);

int max_threads();

/// Runs fn(begin, end) over a partition of [0, n). Each index is processed by
/// exactly one worker and results must be written to disjoint slots, so the
/// output is identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace jcc
