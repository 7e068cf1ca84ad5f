#pragma once

namespace medfuse {

// CLI entry point (testable in-process). Exit codes: 0 success, 1 usage or
// configuration error, 2 data error, 3 numeric/internal error.
int cli_main(int argc, const char* const* argv);

}  // namespace medfuse
