#include "ehd/error.hpp"

namespace ehd {

const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::domain: return "domain";
    case Errc::degenerate_arc: return "degenerate-arc";
    case Errc::iteration_failure: return "iteration-failure";
    case Errc::bracket_failure: return "bracket-failure";
    case Errc::monotonicity_violation: return "monotonicity-violation";
    case Errc::support_overlap: return "support-overlap";
    case Errc::support: return "support";
    case Errc::resolution: return "resolution";
    case Errc::config: return "config";
    case Errc::io: return "io";
    }
    return "unknown";
}

} // namespace ehd
