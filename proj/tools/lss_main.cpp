#include "lss/cli.hpp"

int main(int argc, char** argv) { return lss::run_cli(argc, argv); }
