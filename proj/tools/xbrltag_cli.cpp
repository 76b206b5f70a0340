#include "xbrltag/cli.h"

int main(int argc, char** argv) { return xbrltag::cli_main(argc, argv); }
