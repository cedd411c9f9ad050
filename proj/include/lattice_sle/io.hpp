#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lattice_sle/analysis.hpp"
#include "lattice_sle/curve.hpp"
#include "lattice_sle/loewner.hpp"
#include "lattice_sle/observables.hpp"

namespace lsle::io {

// CSV schemas (fixed column layouts; values printed with %.12g)
void write_curve_csv(const std::string& path, const InterfaceCurve& curve);
void write_driving_csv(const std::string& path, const loewner::DrivingSample& d);
loewner::DrivingSample read_driving_csv(const std::string& path);
void write_trace_csv(const std::string& path, const loewner::HalfPlaneCurve& c,
                     const std::vector<double>& times);
void write_observable_csv(const std::string& path, const observables::EdgeObservable& F);
void write_height_csv(const std::string& path, const observables::HeightFunction& H);
void write_curve_svg(const std::string& path, const InterfaceCurve& curve);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit content digest, hex encoded
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

} // namespace lsle::io
