#include "levyma/cli.hpp"

int main(int argc, char** argv) { return levyma::cli_main(argc, argv); }
