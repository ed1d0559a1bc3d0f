#include "igs/pipeline/commands.hpp"

int main(int argc, char** argv) { return igs::run_cli(argc, argv); }
