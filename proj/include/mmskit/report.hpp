#pragma once

#include <compare>
#include <ostream>
#include <string>
#include <vector>

namespace mmskit {

/// One finding from a validation pass. `code` is a stable machine-readable
/// tag, `subject` names the offending element (factor id, link id, ...).
struct Violation {
    std::string code;
    std::string subject;
    std::string message;

    auto operator<=>(const Violation&) const = default;
};

/// Validation results are data, not failures: an empty report means valid.
struct ValidationReport {
    std::vector<Violation> violations;

    bool empty() const noexcept { return violations.empty(); }
    std::size_t size() const noexcept { return violations.size(); }

    void add(std::string code, std::string subject, std::string message) {
        violations.push_back({std::move(code), std::move(subject), std::move(message)});
    }

    /// Sorts and removes duplicates so reports compare equal regardless of
    /// the declaration order of the inspected document.
    void normalize();

    bool operator==(const ValidationReport&) const = default;
};

std::ostream& operator<<(std::ostream& os, const ValidationReport& report);

} // namespace mmskit
