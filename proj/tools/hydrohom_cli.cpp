#include "hydrohom/cli.hpp"

int main(int argc, char** argv) { return hydrohom::cli_main(argc, argv); }
