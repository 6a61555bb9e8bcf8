#include "depcen/rng.hpp"

#include "depcen/special.hpp"

namespace depcen {

double Rng::normal() noexcept { return normal_quantile(uniform()); }

}  // namespace depcen
