#include "bode/cli.hpp"

int main(int argc, char** argv) { return bode::cli_main(argc, argv); }
