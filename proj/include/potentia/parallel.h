// Copyright 2026 The Potentia Authors
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

#ifndef POTENTIA_PARALLEL_H_
#define POTENTIA_PARALLEL_H_

#include <functional>

namespace potentia {

// Worker count: `requested` if positive, else POTENTIA_THREADS if set, else
// the hardware concurrency. Always at least 1.
int ResolveThreads(int requested = 0);

// Runs body(index, worker) for index in [0, count) on `threads` workers with
// a static contiguous partition. Callers write results by index, so the
// outcome does not depend on the schedule. The first exception thrown by a
// body is rethrown after all workers finish.
void ParallelFor(int count, int threads,
                 const std::function<void(int index, int worker)>& body);

}  // namespace potentia

#endif  // POTENTIA_PARALLEL_H_
