#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qax::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

// Runs the `qax` command line. Data goes to `out`, progress and
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `key = value` lines; blank lines and lines starting with '#' are
// ignored. Keys are flag names without the leading dashes.
std::map<std::string, std::string> parse_config_text(const std::string& text);

}  // namespace qax::cli
