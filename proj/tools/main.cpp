#include "dcenv_cli.hpp"

int main(int argc, char **argv) { return dcenv::cli::run_cli(argc, argv); }
