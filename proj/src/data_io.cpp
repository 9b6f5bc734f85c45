#include "qtf/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "qtf/errors.hpp"

namespace qtf {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Box-Muller over raw mt19937_64 output. Unlike std::normal_distribution,
/// the mapping from seed to values is fixed by this code, so generated
/// datasets are reproducible across standard libraries.
class NormalSampler {
  public:
    explicit NormalSampler(uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    uint64_t raw() { return rng_(); }

  private:
    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

void normalize_columns(MatrixXd& m) {
    for (long c = 0; c < m.cols(); ++c) {
        const double norm = m.col(c).norm();
        if (norm <= 0.0) throw DataError("cannot normalize a zero column");
        m.col(c) /= norm;
    }
}

uint32_t read_u32_be(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw DataError("truncated file while reading header");
    return (static_cast<uint32_t>(bytes[0]) << 24) |
           (static_cast<uint32_t>(bytes[1]) << 16) |
           (static_cast<uint32_t>(bytes[2]) << 8) | static_cast<uint32_t>(bytes[3]);
}

void write_u32_le(std::ostream& out, uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(bytes), 4);
}

uint32_t read_u32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw DataError("truncated bundle file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[i]) << (8 * i);
    return v;
}

void write_u64_le(std::ostream& out, uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(bytes), 8);
}

uint64_t read_u64_le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw DataError("truncated bundle file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_f64_le(std::ostream& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64_le(out, bits);
}

double read_f64_le(std::istream& in) {
    const uint64_t bits = read_u64_le(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32_le(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const uint32_t len = read_u32_le(in);
    if (len > (1u << 20)) throw DataError("bundle string field too long");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("truncated bundle file");
    return s;
}

/// Deterministic in-place shuffle (explicit Fisher-Yates so the result does
/// not depend on the standard library's std::shuffle implementation).
void deterministic_shuffle(std::vector<int>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

void SyntheticSpec::validate() const {
    if (n_per_domain < 2) throw ParameterError("n_per_domain must be >= 2");
    if (dim < 2 || (dim & (dim - 1)) != 0) {
        throw ParameterError("dim must be a power of two and >= 2");
    }
    if (classes < 2) throw ParameterError("classes must be >= 2");
    if (n_per_domain % classes != 0) {
        throw ParameterError("classes must divide n_per_domain evenly");
    }
    if (std_a <= 0.0 || std_b <= 0.0) throw ParameterError("stds must be > 0");
    if (class_shift < 0.0 || class_shift >= 1.0) {
        throw ParameterError("class_shift must lie in [0, 1)");
    }
    if (class_width_ratio <= 0.0) {
        throw ParameterError("class_width_ratio must be > 0");
    }
}

SyntheticRaw gen_synthetic_raw(const SyntheticSpec& spec, uint64_t seed) {
    spec.validate();
    NormalSampler sampler(seed);

    const int n = spec.n_per_domain;
    const int per_class = n / spec.classes;
    auto class_of = [&](int col) { return col / per_class + 1; };

    // Class positions t_c spread linearly over [+1, -1] along the class
    // axis, width factors g_c spread linearly from 1 to class_width_ratio
    // and rescaled to mean(g^2) = 1, so that the shrunken within-class
    // spread sqrt(1 - shift^2 * mean(t^2)) keeps the domain's marginal
    // moments on the axis exactly at (mean, std).
    std::vector<double> t(static_cast<size_t>(spec.classes));
    std::vector<double> g(static_cast<size_t>(spec.classes));
    double t_sq_mean = 0.0;
    double g_sq_mean = 0.0;
    for (int c = 0; c < spec.classes; ++c) {
        const double frac = static_cast<double>(c) / (spec.classes - 1);
        t[static_cast<size_t>(c)] = 1.0 - 2.0 * frac;
        g[static_cast<size_t>(c)] = 1.0 + (spec.class_width_ratio - 1.0) * frac;
        t_sq_mean += t[static_cast<size_t>(c)] * t[static_cast<size_t>(c)];
        g_sq_mean += g[static_cast<size_t>(c)] * g[static_cast<size_t>(c)];
    }
    t_sq_mean /= spec.classes;
    g_sq_mean /= spec.classes;
    for (double& gc : g) gc /= std::sqrt(g_sq_mean);

    const double between = spec.class_shift * spec.class_shift * t_sq_mean;
    if (between >= 1.0) {
        throw ParameterError("class_shift leaves no within-class variance");
    }
    const double within_base = std::sqrt(1.0 - between);

    // Both domains imprint the class structure on the first two coordinates
    // with the same polarity; what differs across domains is the location and
    // scale of every coordinate, so transfer still requires undoing the
    // domain-level distribution shift.
    auto fill_domain = [&](MatrixXd& m, double mean, double std_dev) {
        m.resize(spec.dim, n);
        for (int c = 0; c < n; ++c) {
            const size_t cls = static_cast<size_t>(class_of(c) - 1);
            for (int r = 0; r < spec.dim; ++r) {
                const double z = sampler.next();
                if (r < 2) {
                    m(r, c) = mean + std_dev * (spec.class_shift * t[cls] +
                                                within_base * g[cls] * z);
                } else {
                    m(r, c) = mean + std_dev * z;
                }
            }
        }
    };

    SyntheticRaw raw;
    fill_domain(raw.domain_a, spec.mean_a, spec.std_a);
    fill_domain(raw.domain_b, spec.mean_b, spec.std_b);

    raw.labels_a.num_classes = spec.classes;
    raw.labels_b.num_classes = spec.classes;
    raw.labels_a.labels.resize(static_cast<size_t>(n));
    raw.labels_b.labels.resize(static_cast<size_t>(n));
    for (int c = 0; c < n; ++c) {
        raw.labels_a.labels[static_cast<size_t>(c)] = class_of(c);
        raw.labels_b.labels[static_cast<size_t>(c)] = class_of(c);
    }
    return raw;
}

std::pair<DatasetBundle, DatasetBundle> gen_synthetic(const SyntheticSpec& spec,
                                                      uint64_t seed) {
    SyntheticRaw raw = gen_synthetic_raw(spec, seed);
    normalize_columns(raw.domain_a);
    normalize_columns(raw.domain_b);

    std::ostringstream prov;
    prov << "synthetic gaussians: domain A mean " << spec.mean_a << " std "
         << spec.std_a << ", domain B mean " << spec.mean_b << " std "
         << spec.std_b << ", dim " << spec.dim << ", " << spec.classes
         << " classes shifted by " << spec.class_shift
         << " * std on the first two coordinates with width ratio "
         << spec.class_width_ratio
         << " and variance-preserving within-class spread, seed " << seed;

    const int n = spec.n_per_domain;
    DatasetBundle a_to_b;
    a_to_b.x.values.resize(spec.dim, 2 * n);
    a_to_b.x.values.leftCols(n) = raw.domain_a;
    a_to_b.x.values.rightCols(n) = raw.domain_b;
    a_to_b.x.n_source = n;
    a_to_b.x.n_target = n;
    a_to_b.y_s = raw.labels_a;
    a_to_b.set_truth(raw.labels_b);
    a_to_b.name = "synthetic_a_to_b";
    a_to_b.provenance = prov.str();
    a_to_b.seed = seed;

    DatasetBundle b_to_a;
    b_to_a.x.values.resize(spec.dim, 2 * n);
    b_to_a.x.values.leftCols(n) = raw.domain_b;
    b_to_a.x.values.rightCols(n) = raw.domain_a;
    b_to_a.x.n_source = n;
    b_to_a.x.n_target = n;
    b_to_a.y_s = raw.labels_b;
    b_to_a.set_truth(raw.labels_a);
    b_to_a.name = "synthetic_b_to_a";
    b_to_a.provenance = prov.str();
    b_to_a.seed = seed;

    return {std::move(a_to_b), std::move(b_to_a)};
}

DigitImages load_mnist_idx(const std::string& images_path,
                           const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open image file: " + images_path);
    const uint32_t img_magic = read_u32_be(img);
    if (img_magic != 0x00000803u) {
        std::ostringstream msg;
        msg << "bad image-file magic 0x" << std::hex << img_magic << " in "
            << images_path;
        throw DataError(msg.str());
    }
    const uint32_t count = read_u32_be(img);
    const uint32_t rows = read_u32_be(img);
    const uint32_t cols = read_u32_be(img);
    if (count == 0 || rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
        throw DataError("implausible image-file dimensions");
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open label file: " + labels_path);
    const uint32_t lab_magic = read_u32_be(lab);
    if (lab_magic != 0x00000801u) {
        std::ostringstream msg;
        msg << "bad label-file magic 0x" << std::hex << lab_magic << " in "
            << labels_path;
        throw DataError(msg.str());
    }
    const uint32_t lab_count = read_u32_be(lab);
    if (lab_count != count) {
        throw DataError("image/label counts differ between files");
    }

    DigitImages out;
    out.count = static_cast<int>(count);
    out.rows = static_cast<int>(rows);
    out.cols = static_cast<int>(cols);
    const size_t pixels_per_image = static_cast<size_t>(rows) * cols;

    std::vector<unsigned char> buffer(pixels_per_image);
    out.pixels.resize(static_cast<long>(pixels_per_image), out.count);
    for (int i = 0; i < out.count; ++i) {
        img.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size()));
        if (!img) throw DataError("truncated image payload");
        for (size_t p = 0; p < pixels_per_image; ++p) {
            out.pixels(static_cast<long>(p), i) = buffer[p] / 255.0;
        }
    }

    std::vector<unsigned char> label_bytes(count);
    lab.read(reinterpret_cast<char*>(label_bytes.data()), count);
    if (!lab) throw DataError("truncated label payload");
    out.labels.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        if (label_bytes[i] > 9) throw DataError("label byte outside 0..9");
        out.labels[i] = label_bytes[i];
    }
    return out;
}

DigitImages load_usps(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::vector<std::vector<double>> rows_data;
    std::vector<double> raw_labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.size() != 257) {
            std::ostringstream msg;
            msg << "expected 257 columns (label + 256 values), got " << vals.size();
            throw DataError(msg.str());
        }
        raw_labels.push_back(vals[0]);
        vals.erase(vals.begin());
        rows_data.push_back(std::move(vals));
    }
    if (rows_data.empty()) throw DataError("no samples in file: " + path);

    double vmin = rows_data[0][0];
    double vmax = vmin;
    for (const auto& r : rows_data) {
        for (double x : r) {
            vmin = std::min(vmin, x);
            vmax = std::max(vmax, x);
        }
    }

    // Range variants: [-1, 1] shifts up, [0, 2] halves, [0, 1] passes through.
    double scale = 1.0;
    double offset = 0.0;
    if (vmin < -1e-6) {
        scale = 0.5;
        offset = 0.5;
    } else if (vmax > 1.0 + 1e-6) {
        scale = 0.5;
    }

    DigitImages out;
    out.count = static_cast<int>(rows_data.size());
    out.rows = 16;
    out.cols = 16;
    out.pixels.resize(256, out.count);
    for (int i = 0; i < out.count; ++i) {
        for (int p = 0; p < 256; ++p) {
            const double mapped =
                rows_data[static_cast<size_t>(i)][static_cast<size_t>(p)] * scale +
                offset;
            out.pixels(p, i) = std::clamp(mapped, 0.0, 1.0);
        }
    }

    bool any_zero = false;
    double max_label = 0.0;
    out.labels.resize(static_cast<size_t>(out.count));
    for (int i = 0; i < out.count; ++i) {
        const double dl = raw_labels[static_cast<size_t>(i)];
        const int l = static_cast<int>(std::lround(dl));
        if (std::abs(dl - l) > 1e-9 || l < 0 || l > 10) {
            throw DataError("label column must hold integers in 0..10");
        }
        if (l == 0) any_zero = true;
        max_label = std::max(max_label, static_cast<double>(l));
        out.labels[static_cast<size_t>(i)] = l;
    }
    // Common 1..10 labeling stores digit 0 as 10; fold it back.
    if (!any_zero && max_label == 10.0) {
        for (int& l : out.labels) l %= 10;
    } else if (max_label > 9.0) {
        throw DataError("mixed 0-based and 10-for-zero labels");
    }
    return out;
}

MatrixXd resize_bilinear(const MatrixXd& images, int rows, int cols,
                         int new_rows, int new_cols) {
    if (images.rows() != static_cast<long>(rows) * cols) {
        throw DimensionError("image stack rows must equal rows*cols");
    }
    if (new_rows < 1 || new_cols < 1) throw ParameterError("target size must be >= 1");

    MatrixXd out(static_cast<long>(new_rows) * new_cols, images.cols());
    const double r_scale = static_cast<double>(rows) / new_rows;
    const double c_scale = static_cast<double>(cols) / new_cols;
    for (long img = 0; img < images.cols(); ++img) {
        for (int r = 0; r < new_rows; ++r) {
            // Center-aligned sampling, clamped at the borders.
            double src_r = (r + 0.5) * r_scale - 0.5;
            src_r = std::clamp(src_r, 0.0, static_cast<double>(rows - 1));
            const int r0 = static_cast<int>(src_r);
            const int r1 = std::min(r0 + 1, rows - 1);
            const double fr = src_r - r0;
            for (int c = 0; c < new_cols; ++c) {
                double src_c = (c + 0.5) * c_scale - 0.5;
                src_c = std::clamp(src_c, 0.0, static_cast<double>(cols - 1));
                const int c0 = static_cast<int>(src_c);
                const int c1 = std::min(c0 + 1, cols - 1);
                const double fc = src_c - c0;
                const double v00 = images(static_cast<long>(r0) * cols + c0, img);
                const double v01 = images(static_cast<long>(r0) * cols + c1, img);
                const double v10 = images(static_cast<long>(r1) * cols + c0, img);
                const double v11 = images(static_cast<long>(r1) * cols + c1, img);
                out(static_cast<long>(r) * new_cols + c, img) =
                    (1 - fr) * ((1 - fc) * v00 + fc * v01) +
                    fr * ((1 - fc) * v10 + fc * v11);
            }
        }
    }
    return out;
}

namespace {

struct PreparedDigits {
    MatrixXd features;        // 256 x n, unit columns
    std::vector<int> labels;  // 1..10
};

PreparedDigits prepare_digit_set(const DigitImages& raw, int n_take,
                                 std::mt19937_64& rng, const char* which) {
    if (raw.count < n_take) {
        throw DataError(std::string(which) + ": fewer samples than requested");
    }
    MatrixXd features = raw.pixels;
    if (raw.rows != 16 || raw.cols != 16) {
        features = resize_bilinear(features, raw.rows, raw.cols, 16, 16);
    }

    // Per-class quotas: n_take split as evenly as possible over the ten
    // digits, remainder to the lowest digits.
    std::vector<int> quota(10, n_take / 10);
    for (int c = 0; c < n_take % 10; ++c) ++quota[static_cast<size_t>(c)];

    std::vector<std::vector<int>> by_class(10);
    for (int i = 0; i < raw.count; ++i) {
        by_class[static_cast<size_t>(raw.labels[static_cast<size_t>(i)])].push_back(i);
    }

    std::vector<int> chosen;
    chosen.reserve(static_cast<size_t>(n_take));
    for (int c = 0; c < 10; ++c) {
        auto& pool = by_class[static_cast<size_t>(c)];
        if (static_cast<int>(pool.size()) < quota[static_cast<size_t>(c)]) {
            std::ostringstream msg;
            msg << which << ": class " << c << " has " << pool.size()
                << " samples, need " << quota[static_cast<size_t>(c)];
            throw DataError(msg.str());
        }
        deterministic_shuffle(pool, rng);
        chosen.insert(chosen.end(), pool.begin(),
                      pool.begin() + quota[static_cast<size_t>(c)]);
    }

    PreparedDigits prep;
    prep.features.resize(256, static_cast<long>(chosen.size()));
    prep.labels.reserve(chosen.size());
    for (size_t i = 0; i < chosen.size(); ++i) {
        prep.features.col(static_cast<long>(i)) =
            features.col(chosen[i]);
        prep.labels.push_back(raw.labels[static_cast<size_t>(chosen[i])] + 1);
    }
    normalize_columns(prep.features);
    return prep;
}

DatasetBundle make_digit_bundle(const PreparedDigits& src, const PreparedDigits& tgt,
                                const std::string& name, uint64_t seed,
                                const std::string& provenance) {
    DatasetBundle bundle;
    const long n_s = src.features.cols();
    const long n_t = tgt.features.cols();
    bundle.x.values.resize(256, n_s + n_t);
    bundle.x.values.leftCols(n_s) = src.features;
    bundle.x.values.rightCols(n_t) = tgt.features;
    bundle.x.n_source = static_cast<int>(n_s);
    bundle.x.n_target = static_cast<int>(n_t);
    bundle.y_s.num_classes = 10;
    bundle.y_s.labels = src.labels;
    LabelVector truth;
    truth.num_classes = 10;
    truth.labels = tgt.labels;
    bundle.set_truth(std::move(truth));
    bundle.name = name;
    bundle.seed = seed;
    bundle.provenance = provenance;
    return bundle;
}

} // namespace

std::pair<DatasetBundle, DatasetBundle> preprocess_digits(
    const DigitImages& mnist, const DigitImages& usps, int n_mnist, int n_usps,
    uint64_t seed) {
    if (n_mnist < 10 || n_usps < 10) {
        throw ParameterError("need at least one sample per digit class");
    }
    std::mt19937_64 rng(seed);
    const PreparedDigits mn = prepare_digit_set(mnist, n_mnist, rng, "first digit set");
    const PreparedDigits us = prepare_digit_set(usps, n_usps, rng, "second digit set");

    std::ostringstream prov;
    prov << "handwritten digits in a common 16x16 space, unit-norm columns; "
         << n_mnist << " + " << n_usps << " stratified samples, seed " << seed;

    return {make_digit_bundle(mn, us, "mnist_to_usps", seed, prov.str()),
            make_digit_bundle(us, mn, "usps_to_mnist", seed, prov.str())};
}

void save_bundle(const std::string& path, const DatasetBundle& bundle) {
    bundle.x.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);

    out.write("QTFB", 4);
    write_u32_le(out, 1);  // container version
    write_u32_le(out, static_cast<uint32_t>(bundle.x.dim()));
    write_u32_le(out, static_cast<uint32_t>(bundle.x.n_source));
    write_u32_le(out, static_cast<uint32_t>(bundle.x.n_target));
    write_u32_le(out, static_cast<uint32_t>(bundle.y_s.num_classes));
    write_u64_le(out, bundle.seed);
    write_string(out, bundle.name);
    write_string(out, bundle.provenance);

    const MatrixXd& x = bundle.x.values;
    for (long r = 0; r < x.rows(); ++r) {
        for (long c = 0; c < x.cols(); ++c) write_f64_le(out, x(r, c));
    }
    for (int l : bundle.y_s.labels) write_u32_le(out, static_cast<uint32_t>(l));
    const LabelVector& truth = bundle.truth();
    --bundle.truth_accesses;  // serialization is not an evaluation read
    write_u32_le(out, static_cast<uint32_t>(truth.num_classes));
    for (int l : truth.labels) write_u32_le(out, static_cast<uint32_t>(l));
    if (!out) throw DataError("write failed: " + path);
}

DatasetBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "QTFB", 4) != 0) {
        throw DataError("bad bundle magic in " + path);
    }
    const uint32_t version = read_u32_le(in);
    if (version != 1) throw DataError("unsupported bundle version");

    const uint32_t dim = read_u32_le(in);
    const uint32_t n_source = read_u32_le(in);
    const uint32_t n_target = read_u32_le(in);
    const uint32_t num_classes = read_u32_le(in);
    if (dim == 0 || n_source == 0 || n_target == 0 || dim > (1u << 20)) {
        throw DataError("implausible bundle dimensions");
    }

    DatasetBundle bundle;
    bundle.seed = read_u64_le(in);
    bundle.name = read_string(in);
    bundle.provenance = read_string(in);

    bundle.x.values.resize(dim, n_source + n_target);
    for (uint32_t r = 0; r < dim; ++r) {
        for (uint32_t c = 0; c < n_source + n_target; ++c) {
            bundle.x.values(r, c) = read_f64_le(in);
        }
    }
    bundle.x.n_source = static_cast<int>(n_source);
    bundle.x.n_target = static_cast<int>(n_target);

    bundle.y_s.num_classes = static_cast<int>(num_classes);
    bundle.y_s.labels.resize(n_source);
    for (uint32_t i = 0; i < n_source; ++i) {
        bundle.y_s.labels[i] = static_cast<int>(read_u32_le(in));
    }
    LabelVector truth;
    truth.num_classes = static_cast<int>(read_u32_le(in));
    truth.labels.resize(n_target);
    for (uint32_t i = 0; i < n_target; ++i) {
        truth.labels[i] = static_cast<int>(read_u32_le(in));
    }
    bundle.set_truth(std::move(truth));

    bundle.x.validate();
    bundle.y_s.validate();
    return bundle;
}

} // namespace qtf
