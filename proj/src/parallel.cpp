#include "decompal/parallel.hpp"

#include <cstdlib>
#include <string>

namespace decompal {

int default_thread_count() {
  if (const char* env = std::getenv("DECOMPAL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace decompal
