#include "tdbsde/cli.hpp"

int main(int argc, char** argv) { return tdbsde::cli::main(argc, argv); }
