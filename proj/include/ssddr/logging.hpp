#ifndef SSDDR_LOGGING_HPP
#define SSDDR_LOGGING_HPP

#include <string>

namespace ssddr {

// Log levels, ordered by verbosity.  The active level is taken from the
// SSDDR_LOG environment variable ("quiet", "warn", "info"); default "warn".
enum class LogLevel { Quiet = 0, Warn = 1, Info = 2 };

LogLevel log_level();

// Write a message to stderr if the active level admits it.
void log_warn(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace ssddr

#endif
