#include "fedsoft/runner.hpp"

int main(int argc, char** argv) { return fedsoft::run_cli(argc, argv); }
