#include "cli_lib.hpp"

int main(int argc, char** argv) { return finhol::cli::cli_main(argc, argv); }
