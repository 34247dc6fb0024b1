#include "frailtykit/cli.hpp"

int main(int argc, char** argv) { return frailtykit::cli::cli_dispatch(argc, argv); }
