#include "drylab/util/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace drylab::log {

namespace {
std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;

const char* prefix(Level level) {
  switch (level) {
    case Level::Debug: return "[debug] ";
    case Level::Info: return "[info] ";
    case Level::Warn: return "[warn] ";
    case Level::Error: return "[error] ";
  }
  return "";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }

void emit(Level level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(g_level.load())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << prefix(level) << message << "\n";
}

}  // namespace drylab::log
