#include "cli_app.hpp"

int main(int argc, char** argv) { return leafroi::cli::run_cli(argc, argv); }
