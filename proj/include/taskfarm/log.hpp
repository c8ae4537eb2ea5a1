#pragma once

#include <sstream>
#include <string>

namespace taskfarm::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Threshold comes from the TASKFARM_LOG environment variable
// (debug|info|warn|error|off), read once. Default: warn.
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& text);

namespace detail {
template <typename... Args>
void emit(Level level, Args&&... args) {
    if (level < threshold()) {
        return;
    }
    std::ostringstream os;
    (os << ... << args);
    write(level, os.str());
}
}  // namespace detail

template <typename... Args>
void debug(Args&&... args) {
    detail::emit(Level::Debug, std::forward<Args>(args)...);
}
template <typename... Args>
void info(Args&&... args) {
    detail::emit(Level::Info, std::forward<Args>(args)...);
}
template <typename... Args>
void warn(Args&&... args) {
    detail::emit(Level::Warn, std::forward<Args>(args)...);
}
template <typename... Args>
void error(Args&&... args) {
    detail::emit(Level::Error, std::forward<Args>(args)...);
}

}  // namespace taskfarm::log
