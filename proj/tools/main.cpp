#include "ceilkit/cli.hpp"

int main(int argc, char** argv) { return ceilkit::cli_main(argc, argv); }
