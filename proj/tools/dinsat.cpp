#include "dinsat/cli/cli.hpp"

int main(int argc, char** argv) { return dinsat::cli::run_cli(argc, argv); }
