#include "gpmin/cli.hpp"

int main(int argc, char** argv) { return gpmin::cli::run(argc, argv); }
