#include "eptrack/cli.hpp"

int main(int argc, char** argv) { return eptrack::cli::run_cli(argc, argv); }
