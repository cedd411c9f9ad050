#include "lattice_sle/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lattice_sle/errors.hpp"

namespace lsle::io {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void write_curve_csv(const std::string& path, const InterfaceCurve& curve) {
    std::ostringstream os;
    os << "index,x,y,turn_radians\n";
    for (size_t i = 0; i < curve.points.size(); ++i)
        os << i << ',' << fmt(curve.points[i].real()) << ',' << fmt(curve.points[i].imag()) << ','
           << fmt(i < curve.turns.size() ? curve.turns[i] : 0.0) << '\n';
    write_file(path, os.str());
}

void write_driving_csv(const std::string& path, const loewner::DrivingSample& d) {
    std::ostringstream os;
    os << "t,w\n";
    for (size_t i = 0; i < d.times.size(); ++i)
        os << fmt(d.times[i]) << ',' << fmt(d.values[i]) << '\n';
    write_file(path, os.str());
}

loewner::DrivingSample read_driving_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parameter_error("cannot open " + path);
    loewner::DrivingSample d;
    d.interp = loewner::DrivingSample::Interp::Linear;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw parameter_error("bad driving CSV line: " + line);
        d.times.push_back(std::stod(line.substr(0, comma)));
        d.values.push_back(std::stod(line.substr(comma + 1)));
    }
    return d;
}

void write_trace_csv(const std::string& path, const loewner::HalfPlaneCurve& c,
                     const std::vector<double>& times) {
    std::ostringstream os;
    os << "t,x,y\n";
    for (size_t i = 0; i < c.points.size(); ++i) {
        double t = i < times.size() ? times[i] : 0.0;
        os << fmt(t) << ',' << fmt(c.points[i].real()) << ',' << fmt(c.points[i].imag()) << '\n';
    }
    write_file(path, os.str());
}

void write_observable_csv(const std::string& path, const observables::EdgeObservable& F) {
    std::ostringstream os;
    os << "edge_x,edge_y,re_F,im_F,stderr_re,stderr_im\n";
    const auto& m = *F.medial;
    for (size_t e = 0; e < m.edges.size(); ++e) {
        auto [v1, v2] = m.edges[e];
        auto mid = 0.5 * (m.pos[v1] + m.pos[v2]);
        double se = e < F.edge_stderr.size() ? F.edge_stderr[e] : 0.0;
        os << fmt(mid.real()) << ',' << fmt(mid.imag()) << ',' << fmt(F.edge_values[e].real())
           << ',' << fmt(F.edge_values[e].imag()) << ',' << fmt(se) << ',' << fmt(se) << '\n';
    }
    write_file(path, os.str());
}

void write_height_csv(const std::string& path, const observables::HeightFunction& H) {
    std::ostringstream os;
    os << "face_x,face_y,color,H\n";
    const auto& m = *H.medial;
    for (size_t f = 0; f < m.face_vertices.size(); ++f)
        os << fmt(m.face_center[f].real()) << ',' << fmt(m.face_center[f].imag()) << ','
           << (H.color[f] ? "black" : "white") << ',' << fmt(H.face_values[f]) << '\n';
    write_file(path, os.str());
}

void write_curve_svg(const std::string& path, const InterfaceCurve& curve) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto p : curve.points) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    double w = std::max(xmax - xmin, 1e-9), h = std::max(ymax - ymin, 1e-9);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt(w) << ' ' << fmt(h)
       << "\">\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"" << fmt(0.002 * std::max(w, h))
       << "\" points=\"";
    for (auto p : curve.points)
        os << fmt(p.real() - xmin) << ',' << fmt(ymax - p.imag()) << ' ';
    os << "\"/>\n</svg>\n";
    write_file(path, os.str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parameter_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parameter_error("cannot write " + path);
    out << content;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::string& path) { return fnv1a_hex(read_file(path)); }

} // namespace lsle::io
