#include "rvol/cli.hpp"

int main(int argc, char** argv) { return rvol::cli::run(argc, argv); }
