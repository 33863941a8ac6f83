#pragma once

#include <string>
#include <vector>

namespace relgate {

/// Runs the relgate command line. args excludes the program name.
/// Exit status: 0 = pass/ok, 1 = gate fail or findings, 2 = usage/IO error.
int cli_run(const std::vector<std::string>& args);

}  // namespace relgate
