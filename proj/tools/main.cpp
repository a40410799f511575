#include <adasprt/cli/cli.hpp>

int main(int argc, char** argv) { return adasprt::cli::cli_main(argc, argv); }
