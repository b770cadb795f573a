#pragma once

#include <string>

namespace mofs {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_info(const std::string& msg);
void log_debug(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace mofs
