#include "canonica/cli/commands.hpp"

int main(int argc, char** argv) { return canonica::cli::run(argc, argv); }
