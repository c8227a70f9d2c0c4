#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peripartum::cli {

/// Exit codes shell pipelines can branch on.
enum Exit : int {
  kOk = 0,
  kFailure = 1,  // usage errors, execution faults
  kParse = 2,    // SQL that does not parse, unusable parameters, reply without SQL
  kResolve = 3,  // unknown table, column or stored query
  kGuardrail = 4,
  kConstraint = 5,  // violations found or rows quarantined under --strict
  kIo = 6,          // unreadable files, corrupt journal, unreachable model
};

/// Runs one invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peripartum::cli
