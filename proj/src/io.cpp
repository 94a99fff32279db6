#include "fbmin/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fbmin/error.hpp"

namespace fbmin::io {

namespace {

static_assert(std::endian::native == std::endian::little, "FBM1 writer assumes a little-endian host");

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::string fmt(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

std::vector<double> split_doubles(const std::string& line, const std::filesystem::path& path, int lineno) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ": bad number '" + tok + "'", lineno);
        }
    }
    return out;
}

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error(path.string() + ": truncated file");
    return v;
}

}  // namespace

void write_csv(const ScalarField& f, const std::filesystem::path& path) {
    const auto& g = f.grid();
    auto out = open_out(path, false);
    out << g.nx() << ',' << g.ny() << ',' << fmt(g.box().ax) << ',' << fmt(g.box().bx) << ',' << fmt(g.box().ay)
        << ',' << fmt(g.box().by) << '\n';
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            if (i) out << ',';
            out << fmt(f.at(i, j));
        }
        out << '\n';
    }
}

ScalarField read_csv(const std::filesystem::path& path) {
    auto in = open_in(path, false);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file", 1);
    const auto head = split_doubles(line, path, 1);
    if (head.size() != 6) throw ConfigError(path.string() + ": header needs nx,ny,ax,bx,ay,by", 1);
    const auto nx = static_cast<std::size_t>(head[0]);
    const auto ny = static_cast<std::size_t>(head[1]);
    const GridSpec grid = make_grid({head[2], head[3], head[4], head[5]}, nx, ny);
    std::vector<double> values;
    values.reserve(grid.node_count());
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto row = split_doubles(line, path, lineno);
        if (row.size() != nx) throw ConfigError(path.string() + ": row has wrong length", lineno);
        values.insert(values.end(), row.begin(), row.end());
    }
    if (values.size() != grid.node_count()) throw ConfigError(path.string() + ": wrong number of rows");
    return ScalarField(grid, std::move(values));
}

void write_fbm(const ScalarField& f, const std::filesystem::path& path) {
    const auto& g = f.grid();
    auto out = open_out(path, true);
    out.write("FBM1", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny()));
    for (double v : {g.box().ax, g.box().bx, g.box().ay, g.box().by}) put<double>(out, v);
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * sizeof(double)));
    if (!out) throw Error("write failed: " + path.string());
}

ScalarField read_fbm(const std::filesystem::path& path) {
    auto in = open_in(path, true);
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "FBM1", 4) != 0) {
        throw Error(path.string() + ": not an FBM1 file");
    }
    const auto nx = get<std::uint32_t>(in, path);
    const auto ny = get<std::uint32_t>(in, path);
    Box box;
    box.ax = get<double>(in, path);
    box.bx = get<double>(in, path);
    box.ay = get<double>(in, path);
    box.by = get<double>(in, path);
    const GridSpec grid = make_grid(box, nx, ny);
    std::vector<double> values(grid.node_count());
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
        throw Error(path.string() + ": truncated file");
    }
    return ScalarField(grid, std::move(values));
}

namespace {

void write_p5(const GridSpec& g, const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    auto out = open_out(path, true);
    out << "P5\n" << g.nx() << ' ' << g.ny() << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

void write_pgm(const Mask& mask, const std::filesystem::path& path) {
    const auto& g = mask.grid();
    std::vector<unsigned char> bytes;
    bytes.reserve(g.node_count());
    for (std::size_t jj = 0; jj < g.ny(); ++jj) {
        const std::size_t j = g.ny() - 1 - jj;
        for (std::size_t i = 0; i < g.nx(); ++i) bytes.push_back(mask[g.index(i, j)] ? 255 : 0);
    }
    write_p5(g, path, bytes);
}

void write_pgm(const ScalarField& f, const std::filesystem::path& path) {
    const auto& g = f.grid();
    double hi = 0.0;
    for (double v : f.values()) hi = std::max(hi, v);
    std::vector<unsigned char> bytes;
    bytes.reserve(g.node_count());
    for (std::size_t jj = 0; jj < g.ny(); ++jj) {
        const std::size_t j = g.ny() - 1 - jj;
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const double v = hi > 0.0 ? std::clamp(f.at(i, j) / hi, 0.0, 1.0) : 0.0;
            bytes.push_back(static_cast<unsigned char>(std::lround(255.0 * v)));
        }
    }
    write_p5(g, path, bytes);
}

std::vector<unsigned char> read_pgm(const std::filesystem::path& path, std::size_t& width, std::size_t& height) {
    auto in = open_in(path, true);
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || maxval != 255) throw Error(path.string() + ": not an 8-bit P5 image");
    in.get();
    std::vector<unsigned char> bytes(width * height);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw Error(path.string() + ": truncated image");
    }
    return bytes;
}

}  // namespace fbmin::io
