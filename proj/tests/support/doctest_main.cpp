#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drylab/util/log.hpp"

namespace {
struct QuietLogs {
  QuietLogs() { drylab::log::set_level(drylab::log::Level::Error); }
} quiet_logs;
}  // namespace
