#include "localmax/cli.hpp"

int main(int argc, char** argv) { return localmax::cli::run(argc, argv); }
