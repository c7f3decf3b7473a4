#ifndef CASCADE_HARNESS_HPP
#define CASCADE_HARNESS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "cascade/suites.hpp"

namespace cascade {

enum ExitCode : int { kExitOk = 0, kExitSuiteFailure = 1, kExitUsage = 2, kExitNumerical = 3 };

/// Summary written next to a trace: config echo, instance hash, regret and deviation sums.
Json run_summary(const NetworkInstance& net, const std::string& instance_source, const std::string& instance_hash,
                 const RunConfig& cfg, const RunResult& result);

/// cascade-bandits {generate|hard|run|verify|sweep} [flags]; args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cascade

#endif  // CASCADE_HARNESS_HPP
