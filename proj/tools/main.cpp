#include "ringkit/cli.hpp"

int main(int argc, char** argv) { return ringkit::cli::main_entry(argc, argv); }
