#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reid::cli {

/// Runs one `reid` subcommand. Exit codes: 0 success, 1 runtime or configuration error (one-line
/// cause on `err`), 2 usage error (unknown subcommand, bad flags).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommands();

}  // namespace reid::cli
