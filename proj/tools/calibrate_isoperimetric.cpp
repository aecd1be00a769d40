// Prints the largest relative isoperimetric ratio seen over the calibration
// seeds, and that value rounded up to 0.01 for freezing in constants.hpp.

#include <cmath>
#include <cstdint>
#include <cstdio>

#include "CLI11.hpp"
#include "perimeter_lab/calibration.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relative isoperimetric constant calibration"};
  std::uint64_t first = 1, last2 = 1000, last3 = 1000;
  app.add_option("--first", first, "first seed");
  app.add_option("--last-2d", last2, "last seed in 2D");
  app.add_option("--last-3d", last3, "last seed in 3D");
  CLI11_PARSE(app, argc, argv);

  for (int dim : {2, 3}) {
    const auto scan = perimeter_lab::scan_isoperimetric(dim, first, dim == 2 ? last2 : last3);
    std::printf("dim=%d cases=%zu max_ratio=%.9f seed=%llu kind=%s frozen=%.2f\n", dim, scan.informative,
                scan.max_ratio, static_cast<unsigned long long>(scan.argmax_seed), scan.argmax_kind.c_str(),
                std::ceil(scan.max_ratio * 100.0) / 100.0);
  }
  return 0;
}
