#pragma once

#include <iosfwd>

namespace pestab {

inline constexpr const char* kVersion = "1.0.0";

/// Entry point of the pestab tool. Exit codes: 0 pass, 1 property failure,
/// 2 invalid input, 3 partial result.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pestab
