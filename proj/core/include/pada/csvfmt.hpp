#pragma once

#include <string>

namespace pada {

// Shortest decimal string that round-trips the exact double. Keeps CSV
// artifacts byte-stable across runs without padding every value to 17
// digits.
std::string format_double(double v);

}  // namespace pada
