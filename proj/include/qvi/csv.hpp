#pragma once

#include <string>

namespace qvi {

/// Shortest decimal form with 17 significant digits; round-trips doubles
/// bit-exactly through text.
std::string format_g17(double v);

} // namespace qvi
