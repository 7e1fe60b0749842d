#include "ssddr/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace ssddr {

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("SSDDR_LOG");
        if (env == nullptr) return LogLevel::Warn;
        std::string v(env);
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "info") return LogLevel::Info;
        return LogLevel::Warn;
    }();
    return level;
}

void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::Warn) std::cerr << "[warn] " << msg << "\n";
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

}  // namespace ssddr
