#pragma once

#include <complex>
#include <vector>

namespace lsle {

// Chordal interface as an ordered polyline. points[i] are dual/medial vertex
// coordinates; turns[i] is the signed turning angle at points[i] (zero at both
// ends: the tip contributes no turn).
struct InterfaceCurve {
    std::vector<std::complex<double>> points;
    double lattice_step = 1.0;
    std::vector<double> turns;
};

} // namespace lsle
