#include "wgeo/cli/commands.hpp"

int main(int argc, char** argv) { return wgeo::cli::run(argc, argv); }
