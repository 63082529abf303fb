#include "traitfolio/cli.hpp"

int main(int argc, char** argv) { return traitfolio::cli::run(argc, argv); }
