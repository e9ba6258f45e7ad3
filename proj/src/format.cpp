#include "edformer/format.hpp"

#include <charconv>

namespace edformer {

std::string format_number(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

}  // namespace edformer
