#include "cselect/cli.hpp"

int main(int argc, char** argv) { return cselect::run_cli(argc, argv); }
