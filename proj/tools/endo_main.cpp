#include "endo/cli.hpp"

int main(int argc, char** argv) { return endo::cli::run_main(argc, argv); }
