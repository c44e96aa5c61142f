#include "ipl/cli/app.hpp"

int main(int argc, char** argv) { return ipl::cli::run(argc, argv); }
