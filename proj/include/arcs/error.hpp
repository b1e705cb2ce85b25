#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arcs {

/// Machine-readable failure categories. The CLI prints `to_string(code)`
/// as the first token of its single-line error report.
enum class ErrorCode {
    config,
    contract,
    convergence,
    empty_input,
    degenerate_input,
    decomposition,
    undefined_imbalance,
    acceptance_failure,
    calibration,
    io,
    simulation,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::config: return "E_CONFIG";
        case ErrorCode::contract: return "E_CONTRACT";
        case ErrorCode::convergence: return "E_CONVERGENCE";
        case ErrorCode::empty_input: return "E_EMPTY_INPUT";
        case ErrorCode::degenerate_input: return "E_DEGENERATE_INPUT";
        case ErrorCode::decomposition: return "E_DECOMPOSITION";
        case ErrorCode::undefined_imbalance: return "E_UNDEFINED_IMBALANCE";
        case ErrorCode::acceptance_failure: return "E_ACCEPTANCE_FAILURE";
        case ErrorCode::calibration: return "E_CALIBRATION";
        case ErrorCode::io: return "E_IO";
        case ErrorCode::simulation: return "E_SIMULATION";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

   private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace arcs
