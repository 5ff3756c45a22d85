#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace fmsnet {

/// Process-wide warning sink. Defaults to stderr; tests install a capturing handler.
using WarningHandler = std::function<void(std::string_view)>;

void warn(std::string_view message);
/// Returns the previous handler. Passing an empty function restores stderr output.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace fmsnet
