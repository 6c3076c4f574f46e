#include "cli.hpp"

int main(int argc, char** argv) { return zfmaser::cli::run(argc, argv); }
