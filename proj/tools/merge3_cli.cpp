#include "merge3/cli.hpp"

int main(int argc, char** argv) { return merge3::cli_main(argc, argv); }
