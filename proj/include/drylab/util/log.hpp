#pragma once

#include <string>

namespace drylab::log {

enum class Level { Debug, Info, Warn, Error };

/// Minimum level that reaches stderr. Tests raise this to keep output quiet.
void set_level(Level level);

void emit(Level level, const std::string& message);

inline void debug(const std::string& m) { emit(Level::Debug, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }
inline void error(const std::string& m) { emit(Level::Error, m); }

}  // namespace drylab::log
