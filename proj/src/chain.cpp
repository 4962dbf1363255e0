// Apache License, Version 2.0, refer to LICENSE.txt

#include "sepex/chain.hpp"

#include "sepex/error.hpp"

namespace sepex {

void RunSettings::validate() const {
  if (iters <= burnin) {
    throw ValidationError("iters must exceed burnin");
  }
  if (thin == 0) {
    throw ValidationError("thin must be >= 1");
  }
}

}  // namespace sepex
