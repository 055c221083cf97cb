#pragma once

namespace percolate::cli {

/// Exit codes: 0 success, 2 usage or validation error, 3 solver failure, 1 anything else.
int dispatch(int argc, const char* const* argv);

}  // namespace percolate::cli
