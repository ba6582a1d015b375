#include "ssb/cli.hpp"

int main(int argc, char** argv) { return ssb::cli::main_entry(argc, argv); }
