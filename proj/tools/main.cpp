#include <iostream>
#include <string>
#include <vector>

#include "symkernel_app.hpp"

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    return symkernel::app::run(args, std::cout, std::cerr);
}
