#include <iostream>

#include "streamopt/cli.hpp"

int main(int argc, char** argv)
{
    return streamopt::run_cli(argc, argv, std::cout, std::cerr);
}
