/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#include "relucert/cli.hpp"

int main(int argc, char** argv) { return relucert::run_cli(argc, argv); }
