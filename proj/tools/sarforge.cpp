#include "sarforge/cli.hpp"

int main(int argc, char** argv) { return sarforge::cli_main(argc, argv); }
