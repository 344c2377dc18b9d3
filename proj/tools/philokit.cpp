#include "philokit/cli.hpp"

int main(int argc, char** argv) { return philokit::cli::run(argc, argv); }
