#include "sdm/cli.hpp"

int main(int argc, char** argv) { return sdm::run_cli(argc, argv); }
