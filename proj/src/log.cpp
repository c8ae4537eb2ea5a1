#include "taskfarm/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace taskfarm::log {

namespace {

Level parse_level(const char* text) {
    if (text == nullptr) {
        return Level::Warn;
    }
    std::string s(text);
    if (s == "debug") return Level::Debug;
    if (s == "info") return Level::Info;
    if (s == "warn") return Level::Warn;
    if (s == "error") return Level::Error;
    if (s == "off" || s == "none") return Level::Off;
    return Level::Warn;
}

Level& threshold_ref() {
    static Level level = parse_level(std::getenv("TASKFARM_LOG"));
    return level;
}

const char* tag(Level level) {
    switch (level) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
        default: return "?";
    }
}

}  // namespace

Level threshold() { return threshold_ref(); }

void set_threshold(Level level) { threshold_ref() = level; }

void write(Level level, const std::string& text) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "taskfarm[" << tag(level) << "] " << text << "\n";
}

}  // namespace taskfarm::log
