#include "flower/cli.hpp"

int main(int argc, char** argv) { return flower::cli::run(argc, argv); }
