#include "cotsel/cli.hpp"

int main(int argc, char** argv) { return cotsel::cli::run(argc, argv); }
