#include "medfuse/util.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "medfuse/error.hpp"

namespace medfuse {

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw DataError("read failed: " + path);
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + path);
}

std::uint64_t hash_file(const std::string& path) {
    return fnv1a64(read_file(path));
}

namespace {

// Howard Hinnant's civil-from-days; days relative to 1970-01-01.
void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long yy = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::string date_from_day(long day) {
    // 2018-01-01 is 17532 days after the epoch.
    int y;
    unsigned m, d;
    civil_from_days(day + 17532, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return std::string(buf);
}

bool parse_decimal(const std::string& raw, double& out) {
    if (raw.empty()) return false;
    const char* begin = raw.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + raw.size()) return false;
    if (!(v == v) || v > 1.7e308 || v < -1.7e308) return false;  // NaN / inf rejected
    out = v;
    return true;
}

}  // namespace medfuse
