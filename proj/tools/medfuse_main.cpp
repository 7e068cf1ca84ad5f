#include "medfuse/cli.hpp"

int main(int argc, char** argv) { return medfuse::cli_main(argc, argv); }
