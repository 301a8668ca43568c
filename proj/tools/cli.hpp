#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rfp::cli {

// Exit statuses shared by every subcommand.
enum Exit : int {
  kOk = 0,
  kFailed = 1,     // non-compliant, invalid database, blamed party
  kAbnormal = 2,   // inconsistent results, transport failure, bad input
};

// Runs one command line (without the program name) and returns the exit
// status. Everything is written to `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rfp::cli
