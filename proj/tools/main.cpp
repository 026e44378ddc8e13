#include "cli.hpp"

int main(int argc, char** argv) { return autodetect::cli::run(argc, argv); }
