#include "photonoc/cli.hpp"

int main(int argc, char** argv) { return photonoc::cli::run(argc, argv); }
