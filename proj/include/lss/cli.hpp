#pragma once

namespace lss {

// Entry point for the lssgen command line tool. Returns the process
// exit code: 0 on success, 2 on usage or input errors, 3 on numerical
// failures.
int run_cli(int argc, char** argv);

}  // namespace lss
