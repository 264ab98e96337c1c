#include "fsr_cli.hpp"

int main(int argc, char** argv) { return fsr::cli::run(argc, argv); }
