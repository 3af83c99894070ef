// SPDX-License-Identifier: Apache-2.0
#include "strokesense/cli.hpp"

int main(int argc, char** argv) { return strokesense::cli::run(argc, argv); }
