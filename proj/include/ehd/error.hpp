#pragma once

#include <stdexcept>
#include <string>

namespace ehd {

enum class Errc {
    domain,
    degenerate_arc,
    iteration_failure,
    bracket_failure,
    monotonicity_violation,
    support_overlap,
    support,
    resolution,
    config,
    io,
};

// Numerical failures map to CLI exit code 3, everything else to 2.
constexpr bool is_numerical(Errc code) noexcept
{
    return code == Errc::iteration_failure || code == Errc::bracket_failure ||
           code == Errc::monotonicity_violation;
}

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool condition, Errc code, const std::string& message)
{
    if (!condition) {
        throw Error(code, message);
    }
}

} // namespace ehd
