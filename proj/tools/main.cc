#include "cli.h"

int main(int argc, char** argv) { return stgib::cli::Run(argc, argv); }
