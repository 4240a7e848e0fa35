#include "photonoc/common.hpp"

#include <cstdlib>
#include <cstring>

namespace photonoc {

LogLevel log_level() {
    static LogLevel cached = [] {
        const char* v = std::getenv("PHOTONOC_LOG");
        if (!v) return LogLevel::Quiet;
        if (std::strcmp(v, "debug") == 0) return LogLevel::Debug;
        if (std::strcmp(v, "info") == 0) return LogLevel::Info;
        return LogLevel::Quiet;
    }();
    return cached;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) fprintf(stderr, "[photonoc] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) fprintf(stderr, "[photonoc:debug] %s\n", msg.c_str());
}

}  // namespace photonoc
