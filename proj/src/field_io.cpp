#include "nsk/field_io.hpp"

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "nsk/errors.hpp"

// The container is declared little-endian; refuse to build elsewhere rather
// than byte-swap silently.
static_assert(__BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__,
              "NSK1 i/o assumes a little-endian host");

namespace nsk {
namespace {

constexpr char kMagic[4] = {'N', 'S', 'K', '1'};

void put_i64(std::ostream& os, int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

int64_t get_i64(std::istream& is) {
    int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

} // namespace

void write_nsk1(const std::string& path, const GridField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    put_i64(os, static_cast<int64_t>(f.kind()));
    put_i64(os, f.ncomp());
    put_i64(os, f.spec().nx);
    put_i64(os, f.spec().ny);
    put_f64(os, f.spec().origin.x);
    put_f64(os, f.spec().origin.y);
    put_f64(os, f.spec().width);
    put_f64(os, f.spec().height);
    os.write(reinterpret_cast<const char*>(f.data()),
             static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path);
}

GridField read_nsk1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not an NSK1 file: " + path);
    const int64_t kind = get_i64(is);
    const int64_t ncomp = get_i64(is);
    const int64_t nx = get_i64(is);
    const int64_t ny = get_i64(is);
    GridSpec spec;
    spec.origin.x = get_f64(is);
    spec.origin.y = get_f64(is);
    spec.width = get_f64(is);
    spec.height = get_f64(is);
    spec.nx = static_cast<int>(nx);
    spec.ny = static_cast<int>(ny);
    if (!is) throw IoError("truncated NSK1 header: " + path);
    if (kind < 0 || kind > 3) throw IoError("bad NSK1 kind field: " + path);
    if (nx < 8 || ny < 8 || nx > (1 << 20) || ny > (1 << 20) || ncomp < 1 || ncomp > 64)
        throw IoError("bad NSK1 dimensions: " + path);

    GridField f(spec, static_cast<FieldKind>(kind), static_cast<int>(ncomp));
    is.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!is || is.gcount() != static_cast<std::streamsize>(f.size() * sizeof(double)))
        throw IoError("truncated NSK1 payload: " + path);
    f.require_finite(path.c_str());
    return f;
}

void write_csv(const std::string& path, const GridField& f) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    const GridSpec& s = f.spec();
    char head[256];
    std::snprintf(head, sizeof head,
                  "# nsk-field kind=%d ncomp=%d nx=%d ny=%d origin=%.17g,%.17g extent=%.17g,%.17g\n",
                  static_cast<int>(f.kind()), f.ncomp(), s.nx, s.ny, s.origin.x, s.origin.y,
                  s.width, s.height);
    os << head << "i,j,x,y";
    for (int c = 0; c < f.rcomp(); ++c) os << ",c" << c;
    os << "\n";
    char num[32];
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const Point p = s.cell_center(i, j);
            os << i << ',' << j;
            std::snprintf(num, sizeof num, ",%.17g", p.x);
            os << num;
            std::snprintf(num, sizeof num, ",%.17g", p.y);
            os << num;
            for (int c = 0; c < f.rcomp(); ++c) {
                std::snprintf(num, sizeof num, ",%.17g", f.at(i, j, c));
                os << num;
            }
            os << "\n";
        }
    if (!os) throw IoError("write failed: " + path);
}

GridField read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(is, header)) throw IoError("empty csv: " + path);
    int kind = -1, ncomp = -1, nx = -1, ny = -1;
    GridSpec spec;
    if (std::sscanf(header.c_str(),
                    "# nsk-field kind=%d ncomp=%d nx=%d ny=%d origin=%lf,%lf extent=%lf,%lf",
                    &kind, &ncomp, &nx, &ny, &spec.origin.x, &spec.origin.y, &spec.width,
                    &spec.height) != 8)
        throw IoError("csv header is not an nsk-field line: " + path);
    spec.nx = nx;
    spec.ny = ny;
    if (kind < 0 || kind > 3 || ncomp < 1 || ncomp > 64)
        throw IoError("bad csv field metadata: " + path);

    std::string columns;
    if (!std::getline(is, columns)) throw IoError("missing csv column row: " + path);

    GridField f(spec, static_cast<FieldKind>(kind), ncomp);
    std::string line;
    size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        int i = -1, j = -1;
        if (!std::getline(ls, tok, ',')) throw IoError("short csv row: " + path);
        i = std::atoi(tok.c_str());
        if (!std::getline(ls, tok, ',')) throw IoError("short csv row: " + path);
        j = std::atoi(tok.c_str());
        if (i < 0 || i >= nx || j < 0 || j >= ny)
            throw IoError("csv cell index out of range: " + path);
        // skip x,y (recomputed from the grid)
        std::getline(ls, tok, ',');
        std::getline(ls, tok, ',');
        for (int c = 0; c < f.rcomp(); ++c) {
            if (!std::getline(ls, tok, ',')) throw IoError("short csv row: " + path);
            f.at(i, j, c) = std::strtod(tok.c_str(), nullptr);
        }
        ++rows;
    }
    if (rows != static_cast<size_t>(nx) * ny)
        throw IoError("csv row count does not cover the grid: " + path);
    f.require_finite(path.c_str());
    return f;
}

void write_field(const std::string& path, const GridField& f) {
    if (has_suffix(path, ".csv")) return write_csv(path, f);
    if (has_suffix(path, ".nsk")) return write_nsk1(path, f);
    throw UsageError("unknown field extension (want .nsk or .csv): " + path);
}

GridField read_field(const std::string& path) {
    if (has_suffix(path, ".csv")) return read_csv(path);
    if (has_suffix(path, ".nsk")) return read_nsk1(path);
    throw UsageError("unknown field extension (want .nsk or .csv): " + path);
}

} // namespace nsk
