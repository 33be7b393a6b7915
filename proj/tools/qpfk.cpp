#include "qpfk/cli.hpp"

int main(int argc, char** argv) { return qpfk::run_cli(argc, argv); }
