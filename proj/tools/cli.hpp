#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spencerctl {

/// Runs one spencerctl command. args excludes the program name.
/// Exit codes: 0 all tolerances met, 1 a tolerance failed, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spencerctl
