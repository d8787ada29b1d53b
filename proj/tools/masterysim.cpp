#include "masterysim/cli.hpp"

int main(int argc, char** argv) { return masterysim::run_cli(argc, argv); }
