#include "ohc/cli.hpp"

int main(int argc, char** argv) { return ohc::cli::run(argc, argv); }
