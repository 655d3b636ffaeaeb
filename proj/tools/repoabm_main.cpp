#include "repoabm/cli.hpp"

int main(int argc, char** argv) { return repoabm::cli_main(argc, argv); }
