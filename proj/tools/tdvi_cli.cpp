#include "tdvi/cli.hpp"

int main(int argc, char** argv) { return tdvi::cli_main(argc, argv); }
