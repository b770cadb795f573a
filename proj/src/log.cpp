#include "mofs/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mofs {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::quiet)};
std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
    std::lock_guard lock(g_mutex);
    std::cerr << "[mofs " << tag << "] " << msg << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_info(const std::string& msg) {
    if (g_level.load() >= static_cast<int>(LogLevel::info)) emit("info", msg);
}

void log_debug(const std::string& msg) {
    if (g_level.load() >= static_cast<int>(LogLevel::debug)) emit("debug", msg);
}

void log_warn(const std::string& msg) { emit("warn", msg); }

}  // namespace mofs
