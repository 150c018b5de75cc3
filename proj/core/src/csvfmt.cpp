#include "pada/csvfmt.hpp"

#include <charconv>

namespace pada {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;  // 64 bytes is always enough for shortest round-trip form
    return std::string(buf, ptr);
}

}  // namespace pada
