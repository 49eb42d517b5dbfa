#include "fleetsim/cli.hpp"

int main(int argc, char** argv) { return fleetsim::cli_main(argc, argv); }
