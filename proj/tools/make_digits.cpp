// Writes a synthetic digit dataset as a pair of IDX files.

#include <cstdlib>
#include <iostream>
#include <string>

#include "mxp/synthetic_digits.hpp"

int main(int argc, char** argv) {
  if (argc != 5) {
    std::cerr << "usage: mxp-make-digits <count> <seed> <images.idx> <labels.idx>\n";
    return 1;
  }
  try {
    const std::size_t n = std::stoull(argv[1]);
    const std::uint64_t seed = std::stoull(argv[2]);
    mxp::Dataset d = mxp::make_synthetic_digits(n, seed);
    mxp::write_idx(d, argv[3], argv[4]);
  } catch (const mxp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
