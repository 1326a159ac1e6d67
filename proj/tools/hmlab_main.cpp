#include "hmlab/cli_app.hpp"

int main(int argc, char** argv) { return hmlab::cli::run(argc, argv); }
