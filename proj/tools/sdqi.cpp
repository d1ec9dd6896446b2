#include <iostream>

#include "sdqi/cli.hpp"

int main(int argc, char** argv) { return sdqi::run(argc, argv, std::cout, std::cerr); }
