#include "shiftgen/cli.hpp"

int main(int argc, char** argv) { return shiftgen::cli::run_main(argc, argv); }
