// Copyright 2026 The linkdp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef LINKDP_PARALLEL_H_
#define LINKDP_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace linkdp {

// Worker count: hardware concurrency, capped by the LINKDP_THREADS
// environment variable when it holds a positive integer.
int WorkerCount();

// Runs body(i) for every i in [0, count) on up to WorkerCount() threads.
// Indices are handed out dynamically; callers write results into per-index
// slots so the outcome does not depend on scheduling.
void ParallelFor(size_t count, const std::function<void(size_t)>& body);

}  // namespace linkdp

#endif  // LINKDP_PARALLEL_H_
