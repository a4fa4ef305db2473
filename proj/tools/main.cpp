#include <iostream>

#include "gmmsom/cli.h"

int main(int argc, char** argv) {
    return gmmsom::cli_main(argc, argv, std::cout, std::cerr);
}
