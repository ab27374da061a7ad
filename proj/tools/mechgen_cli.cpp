#include "mechgen/cli.hpp"

int main(int argc, char** argv) { return mechgen::run_cli(argc, argv); }
