#ifndef BODE_CLI_HPP
#define BODE_CLI_HPP

namespace bode {

/// Entry point for the `bode` tool. Exit codes: 0 success, 1 configuration
/// error, 2 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace bode

#endif
