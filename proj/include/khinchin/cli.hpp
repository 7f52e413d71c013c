#pragma once

#include "khinchin/exactprob.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace khinchin::cli {

/// Malformed command line or input value; maps to exit status 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Comma-separated entries, each "p", "p/q" (exact) or a decimal such as
/// "0.5" or "1e-3" (float). Throws UsageError naming the 1-based entry and
/// its character offset for empty or malformed entries.
WeightVector parse_weights(std::string_view text);

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out` (or --out), diagnostics to `err`.
/// Returns 0 when every verdict passes, 1 when some fail (their claims are
/// listed on `err`), 2 on malformed input or an unwritable output path.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace khinchin::cli
