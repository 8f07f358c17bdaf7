#pragma once

#include <spdlog/spdlog.h>

namespace riccati {

// Library logger. The level is read once from RICCATI_LOG
// (error | info | debug); the default is warn.
spdlog::logger& log();

}  // namespace riccati
