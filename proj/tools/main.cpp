#include "commands.hpp"

int main(int argc, char** argv) { return mkvfb::run_cli(argc, argv); }
