#include "rotadic/experiments.hpp"

int main(int argc, char** argv) { return rotadic::experiments::run_cli(argc, argv); }
