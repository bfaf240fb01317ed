#include "epsaudit/cli_io.hpp"

int main(int argc, char** argv) { return epsaudit::cli_main(argc, argv); }
