/*
 * Copyright (c) 2026 The Strata Authors
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

#ifndef STRATA_CLI_HPP
#define STRATA_CLI_HPP

#include <iosfwd>

namespace strata {

/// Command-line front end. Subcommands: simulate, ingest, correlate,
/// overhead, analyze. Returns the process exit status: 0 on success, 1 on
/// validation or processing failure, 2 on usage errors (unknown flags,
/// missing files, bad selections). Identical invocations over identical
/// inputs produce byte-identical output files.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace strata

#endif  // STRATA_CLI_HPP
