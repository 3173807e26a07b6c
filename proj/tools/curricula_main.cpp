#include "curricula/pipeline.hpp"

int main(int argc, char** argv) { return curricula::run_cli(argc, argv); }
