#include "decompal/cli.hpp"

int main(int argc, char** argv) { return decompal::run_cli(argc, argv); }
