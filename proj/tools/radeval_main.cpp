#include "radeval/cli.hpp"

int main(int argc, char** argv) { return radeval::cli::run(argc, argv); }
