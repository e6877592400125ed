#include "searchsig/cli.hpp"

int main(int argc, char** argv) { return searchsig::dispatch(argc, argv); }
