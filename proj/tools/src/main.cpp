#include "tremor/cli.hpp"

int main(int argc, char** argv) { return tremor::cli::run(argc, argv); }
