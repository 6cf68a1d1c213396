#include <oed/cli.hpp>

int main(int argc, char** argv) { return oed::dispatch(argc, argv); }
