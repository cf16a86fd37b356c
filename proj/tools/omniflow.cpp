#include "omniflow/cli.hpp"

int main(int argc, char** argv) { return omniflow::cli::run(argc, argv); }
