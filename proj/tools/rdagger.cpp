#include "rd/evalcli.hpp"

int main(int argc, char** argv) { return rd::eval::cli_main(argc, argv); }
