#pragma once

#include <ostream>

#include "corpus_mixer/json_io.hpp"

namespace corpus_mixer::cli {

// Exit codes: 0 success, 1 data error, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Defaults of every tunable, as printed by --dump-config.
json default_config();

}  // namespace corpus_mixer::cli
