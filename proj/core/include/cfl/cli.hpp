#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cfl {

// Entry point of the cfl_sim tool. args excludes the program name.
// Returns 0 on success, 1 on invalid input (scenario, flags, policy names),
// 2 when a run fails.
int execute_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfl
