#pragma once

#include <stdexcept>
#include <string>

namespace quadmod {

// Thrown when a requested set size cannot be produced by a generator
// (e.g. a cylinder grid with a prime point count, or fewer than 2 points
// on a sphere).
struct InvalidCount : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown by the lattice carver in strict mode when the target count falls
// strictly inside an energy shell, so no energy-optimal carve of exactly
// that size exists without splitting the shell.
struct CountUnreachable : std::invalid_argument {
    CountUnreachable(std::string msg, double shell_energy, std::size_t shell_population,
                     std::size_t cumulative_below)
        : std::invalid_argument(std::move(msg)),
          shell_energy(shell_energy),
          shell_population(shell_population),
          cumulative_below(cumulative_below) {}

    double shell_energy;            // squared radius of the shell that would be split
    std::size_t shell_population;   // number of lattice nodes on that shell
    std::size_t cumulative_below;   // nodes strictly inside the shell
};

// Thrown by SNR conversions that need bits-per-symbol when none was given.
struct MissingBits : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a SER curve never brackets the requested target level.
struct NoBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed constellation interchange file or experiment config.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown preset / constellation / enum name in user input.
struct UnknownName : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace quadmod
