#include "nelsonlab/runner.hpp"

int main(int argc, char** argv) { return nelson::cli_main(argc, argv); }
