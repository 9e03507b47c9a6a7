#pragma once

#include <complex>

namespace quadmod {

// Gardner timing error from one polarization: the midpoint sample
// correlated with the symbol transition. Decision-free and rotation
// invariant; both quadratures contribute through the complex product.
inline double gardner_ted(std::complex<double> strobe, std::complex<double> midpoint,
                          std::complex<double> prev_strobe) {
    return (midpoint * std::conj(strobe - prev_strobe)).real();
}

}  // namespace quadmod
