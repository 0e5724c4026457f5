#include "cli.hpp"

int main(int argc, char** argv) { return smds::cli::main_entry(argc, argv); }
