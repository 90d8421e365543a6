#include "adtarget/cli.hpp"

int main(int argc, char** argv) { return adtarget::cli::run(argc, argv); }
