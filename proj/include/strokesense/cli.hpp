// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cli.hpp
 * @brief  `strokesense` command-line entry point.
 *
 * Exit status: 0 success, 1 usage or configuration error, 2 data error,
 * 3 training failure (or a failed gradient check).
 */
#ifndef STROKESENSE_CLI_HPP
#define STROKESENSE_CLI_HPP

namespace strokesense::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitTraining = 3;

int run(int argc, char** argv);

}  // namespace strokesense::cli

#endif  // STROKESENSE_CLI_HPP
