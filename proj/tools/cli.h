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

#ifndef LINKDP_TOOLS_CLI_H_
#define LINKDP_TOOLS_CLI_H_

namespace linkdp::cli {

// Exit codes: 0 success, 1 usage or invalid input, 2 numeric failure
// (singular Gram matrix, exhausted SSP retries, replay mismatch).
int Main(int argc, char** argv);

}  // namespace linkdp::cli

#endif  // LINKDP_TOOLS_CLI_H_
