#ifndef SDM_CLI_HPP
#define SDM_CLI_HPP

namespace sdm {

/// Command line front end. Exit codes: 0 success, 2 usage error, 3 data
/// verification mismatch, 4 any other failure.
int run_cli(int argc, const char* const* argv);

} // namespace sdm

#endif
