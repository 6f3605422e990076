#include "swflow/cli.hpp"

int main(int argc, char** argv) { return swflow::cli::run(argc, argv); }
