#include "corpus_mixer/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return corpus_mixer::cli::run(argc, argv, std::cout, std::cerr);
}
