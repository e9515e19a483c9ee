#include "blochsat/cli.hpp"

int main(int argc, char** argv) { return blochsat::cli::run(argc, argv); }
