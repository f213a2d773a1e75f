#include "chgp/cli.hpp"

int main(int argc, char** argv) { return chgp::cli::run(argc, argv); }
