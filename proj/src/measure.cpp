#include "robustot/measure.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace robustot {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
    if (field.empty()) throw ValidationError("empty field on line " + std::to_string(line_no));
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE)
        throw ValidationError("malformed number '" + field + "' on line " + std::to_string(line_no));
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

DiscreteMeasure parse_measure_csv(const std::string& text, bool renormalize) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    // header
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
        if (!trim(line).empty()) {
            header = split_csv_line(trim(line));
            break;
        }
    }
    if (header.size() < 2 || header[0] != "weight")
        throw ValidationError("measure CSV header must be 'weight,x0,...'");
    for (std::size_t k = 1; k < header.size(); ++k) {
        if (header[k] != "x" + std::to_string(k - 1))
            throw ValidationError("unexpected header column '" + header[k] + "'");
    }
    const auto dim = static_cast<Index>(header.size() - 1);

    std::vector<double> weights;
    std::vector<double> coords;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto fields = split_csv_line(row);
        if (static_cast<Index>(fields.size()) != dim + 1) {
            throw ValidationError("dimension mismatch on line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim) + " coordinates, got " +
                                  std::to_string(static_cast<long>(fields.size()) - 1));
        }
        const double w = parse_number(fields[0], line_no);
        if (w < 0) throw ValidationError("negative weight on line " + std::to_string(line_no));
        weights.push_back(w);
        for (Index k = 0; k < dim; ++k) coords.push_back(parse_number(fields[k + 1], line_no));
    }
    if (weights.empty()) throw ValidationError("measure CSV has no rows");

    const auto n = static_cast<Index>(weights.size());
    Matrix points = Eigen::Map<const Matrix>(coords.data(), dim, n);
    Vector w = Eigen::Map<const Vector>(weights.data(), n);
    return DiscreteMeasure(std::move(points), std::move(w), renormalize);
}

DiscreteMeasure load_measure(const std::filesystem::path& path, bool renormalize) {
    return parse_measure_csv(read_file(path), renormalize);
}

std::string format_measure_csv(const DiscreteMeasure& m) {
    std::string out = "weight";
    for (Index k = 0; k < m.dim(); ++k) out += ",x" + std::to_string(k);
    out += '\n';
    char buf[64];
    for (Index i = 0; i < m.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", m.weight(i));
        out += buf;
        for (Index k = 0; k < m.dim(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", m.points()(k, i));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void save_measure(const DiscreteMeasure& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << format_measure_csv(m);
}

DiscreteMeasure image_to_measure(const Image& pixels) {
    if (!pixels.allFinite() || (pixels.array() < 0).any())
        throw ValidationError("image pixels must be finite and nonnegative");
    const Index count = (pixels.array() > 0).count();
    if (count == 0) throw ValidationError("image has no positive pixel");
    Matrix points(2, count);
    Vector w(count);
    Index k = 0;
    for (Index r = 0; r < pixels.rows(); ++r) {
        for (Index c = 0; c < pixels.cols(); ++c) {
            if (pixels(r, c) > 0) {
                points(0, k) = static_cast<double>(r);
                points(1, k) = static_cast<double>(c);
                w(k) = pixels(r, c);
                ++k;
            }
        }
    }
    return DiscreteMeasure(std::move(points), std::move(w), true);
}

Image measure_to_image(const DiscreteMeasure& m, Index rows, Index cols) {
    if (m.dim() != 2) throw ValidationError("image rendering needs a 2-D measure");
    Image img = Image::Zero(rows, cols);
    auto clamp = [](double v, Index hi) { return std::clamp(v, 0.0, static_cast<double>(hi - 1)); };
    for (Index i = 0; i < m.size(); ++i) {
        const double r = clamp(m.points()(0, i), rows);
        const double c = clamp(m.points()(1, i), cols);
        const auto r0 = static_cast<Index>(std::floor(r));
        const auto c0 = static_cast<Index>(std::floor(c));
        const Index r1 = std::min(r0 + 1, rows - 1);
        const Index c1 = std::min(c0 + 1, cols - 1);
        const double fr = r - static_cast<double>(r0);
        const double fc = c - static_cast<double>(c0);
        const double w = m.weight(i);
        img(r0, c0) += w * (1 - fr) * (1 - fc);
        img(r1, c0) += w * fr * (1 - fc);
        img(r0, c1) += w * (1 - fr) * fc;
        img(r1, c1) += w * fr * fc;
    }
    return img;
}

DiscreteMeasure prune(const DiscreteMeasure& m, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw ValidationError("prune threshold must lie in [0, 1)");
    std::vector<Index> keep;
    for (Index i = 0; i < m.size(); ++i)
        if (m.weight(i) >= threshold) keep.push_back(i);
    if (keep.empty()) {
        Index best = 0;
        m.weights().maxCoeff(&best);
        keep.push_back(best);
    }
    if (static_cast<Index>(keep.size()) == m.size()) return m;
    Matrix points(m.dim(), static_cast<Index>(keep.size()));
    Vector w(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        points.col(static_cast<Index>(k)) = m.point(keep[k]);
        w(static_cast<Index>(k)) = m.weight(keep[k]);
    }
    return DiscreteMeasure(std::move(points), std::move(w), true);
}

DiscreteMeasure merge_duplicates(const DiscreteMeasure& m) {
    std::vector<Index> first;
    std::vector<double> mass;
    for (Index i = 0; i < m.size(); ++i) {
        bool merged = false;
        for (std::size_t k = 0; k < first.size(); ++k) {
            if (m.point(first[k]) == m.point(i)) {
                mass[k] += m.weight(i);
                merged = true;
                break;
            }
        }
        if (!merged) {
            first.push_back(i);
            mass.push_back(m.weight(i));
        }
    }
    if (static_cast<Index>(first.size()) == m.size()) return m;
    Matrix points(m.dim(), static_cast<Index>(first.size()));
    for (std::size_t k = 0; k < first.size(); ++k) points.col(static_cast<Index>(k)) = m.point(first[k]);
    return DiscreteMeasure(std::move(points), Eigen::Map<Vector>(mass.data(), static_cast<Index>(mass.size())),
                           true);
}

std::vector<Vector> dedupe_points(const std::vector<Vector>& points, double tol) {
    std::vector<Vector> out;
    for (const auto& p : points) {
        bool seen = false;
        for (const auto& q : out) {
            if ((p - q).norm() <= tol) {
                seen = true;
                break;
            }
        }
        if (!seen) out.push_back(p);
    }
    return out;
}

Matrix stack_columns(const std::vector<Vector>& points) {
    if (points.empty()) return Matrix(0, 0);
    Matrix out(points.front().size(), static_cast<Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (points[k].size() != out.rows()) throw ValidationError("points have mixed dimensions");
        out.col(static_cast<Index>(k)) = points[k];
    }
    return out;
}

std::vector<Vector> split_columns(const Matrix& points) {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(points.cols()));
    for (Index k = 0; k < points.cols(); ++k) out.emplace_back(points.col(k));
    return out;
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& data, std::size_t& pos) {
    for (;;) {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (pos < data.size() && data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw ValidationError("truncated PGM header");
    return data.substr(start, pos - start);
}

long pgm_int(const std::string& data, std::size_t& pos) {
    const std::string tok = pgm_token(data, pos);
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || v < 0) throw ValidationError("bad PGM integer '" + tok + "'");
    return v;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0;
    const std::string magic = pgm_token(data, pos);
    if (magic != "P2" && magic != "P5") throw ValidationError(path.string() + ": not a P2/P5 PGM");
    const long width = pgm_int(data, pos);
    const long height = pgm_int(data, pos);
    const long maxval = pgm_int(data, pos);
    if (width < 1 || height < 1) throw ValidationError("PGM has empty dimensions");
    if (maxval < 1 || maxval > 65535) throw ValidationError("PGM max value out of range");

    Image img(height, width);
    if (magic == "P2") {
        for (long r = 0; r < height; ++r)
            for (long c = 0; c < width; ++c) {
                const long v = pgm_int(data, pos);
                if (v > maxval) throw ValidationError("PGM pixel exceeds max value");
                img(r, c) = static_cast<double>(v);
            }
        return img;
    }
    ++pos;  // single whitespace byte before raster
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    if (data.size() < pos + static_cast<std::size_t>(width * height) * bytes)
        throw ValidationError("truncated PGM raster");
    const auto* raw = reinterpret_cast<const unsigned char*>(data.data() + pos);
    for (long r = 0; r < height; ++r)
        for (long c = 0; c < width; ++c) {
            const std::size_t k = static_cast<std::size_t>(r * width + c) * bytes;
            const unsigned v = bytes == 2 ? (unsigned(raw[k]) << 8) | raw[k + 1] : raw[k];
            if (static_cast<long>(v) > maxval) throw ValidationError("PGM pixel exceeds max value");
            img(r, c) = static_cast<double>(v);
        }
    return img;
}

void write_pgm(const Image& img, const std::filesystem::path& path, bool ascii) {
    if (img.size() == 0) throw ValidationError("cannot write an empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    const double top = img.maxCoeff();
    const double scale = top > 0 ? 255.0 / top : 0.0;
    out << (ascii ? "P2" : "P5") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
    for (Index r = 0; r < img.rows(); ++r) {
        for (Index c = 0; c < img.cols(); ++c) {
            const auto v = static_cast<unsigned>(std::lround(std::clamp(img(r, c) * scale, 0.0, 255.0)));
            if (ascii) {
                out << v << (c + 1 == img.cols() ? '\n' : ' ');
            } else {
                out.put(static_cast<char>(v));
            }
        }
    }
}

}  // namespace robustot
