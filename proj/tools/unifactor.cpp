#include "cli.hpp"

int main(int argc, char** argv) { return unifactor::cli::run(argc, argv); }
