#include "photon_limits/cli.hpp"

int main(int argc, char** argv) { return photon_limits::dispatch(argc, argv); }
