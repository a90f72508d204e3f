#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cssam/corpus.hpp"

namespace cssam::synthetic {

// Number of distinct (verb, object, target) combinations the generator can
// produce; each yields one Java method and a matching docstring.
std::size_t combination_count();

struct Options {
  std::size_t count = 200;
  std::uint64_t seed = 1;
};

// Templated Java methods with docstrings that describe them in plain words.
// Records are a seeded sample of distinct combinations; ids are "syn-<n>".
// Throws ConfigError when count exceeds combination_count().
std::vector<corpus::CodeDocPair> generate(const Options& options);

}  // namespace cssam::synthetic
