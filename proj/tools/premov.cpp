// SPDX-License-Identifier: Apache-2.0
#include "premov/cli.hpp"

int main(int argc, char** argv) { return premov::cli::run_cli(argc, argv); }
