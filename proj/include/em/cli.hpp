#ifndef EM_CLI_HPP
#define EM_CLI_HPP

namespace em::cli {

/// The `emfield` command line: subcommands gen, train, eval, physcheck,
/// info. Returns the process exit code: 0 success, 1 usage error, 2 data
/// error (bad files, mismatched shapes, failed physics assertions), 3
/// numerical abort (non-finite training loss). Callable in-process; never
/// calls exit().
int cli_main(int argc, const char* const* argv);

}  // namespace em::cli

#endif
