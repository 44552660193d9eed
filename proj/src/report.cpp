#include "mmskit/report.hpp"

#include <algorithm>

namespace mmskit {

void ValidationReport::normalize() {
    std::sort(violations.begin(), violations.end());
    violations.erase(std::unique(violations.begin(), violations.end()), violations.end());
}

std::ostream& operator<<(std::ostream& os, const ValidationReport& report) {
    if (report.empty()) return os << "valid (0 violations)\n";
    os << report.size() << " violation(s):\n";
    for (const auto& v : report.violations) {
        os << "  [" << v.code << "] " << v.subject << ": " << v.message << '\n';
    }
    return os;
}

} // namespace mmskit
