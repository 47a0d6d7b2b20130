#include "em/cli.hpp"

int main(int argc, char** argv) { return em::cli::cli_main(argc, argv); }
