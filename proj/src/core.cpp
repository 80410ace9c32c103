#include "dynafs/core.hpp"

#include <cstdlib>

namespace dynafs {

int worker_threads() {
  static int cached = [] {
    const char* env = std::getenv("DYNAFS_THREADS");
    if (env != nullptr) {
      int n = std::atoi(env);
      if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : (int)hw;
  }();
  return cached;
}

}  // namespace dynafs
