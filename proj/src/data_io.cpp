#include "vmtu/data_io.hpp"

#include "vmtu/ad/tensor.hpp"
#include "vmtu/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace vmtu {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void paint(BinaryMask& m, const BinaryMask& shape)
{
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        m.bits[i] |= shape.bits[i];
}

BinaryMask make_shape(ShapeFamily family, int n, ad::Rng& rng)
{
    const double s = n;
    BinaryMask m(n, n);
    switch (family) {
    case ShapeFamily::Disks: {
        const double r = rng.uniform(0.1 * s, 0.2 * s);
        const double cy = rng.uniform(r + 1.0, s - r - 2.0);
        const double cx = rng.uniform(r + 1.0, s - r - 2.0);
        return rasterize_disk(n, n, cy, cx, r);
    }
    case ShapeFamily::Rectangles: {
        const double hh = rng.uniform(0.15 * s, 0.45 * s);
        const double ww = rng.uniform(0.15 * s, 0.45 * s);
        const double y0 = rng.uniform(1.0, s - hh - 1.0);
        const double x0 = rng.uniform(1.0, s - ww - 1.0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                m(r, c) = (r >= y0 && r < y0 + hh && c >= x0 && c < x0 + ww) ? 1 : 0;
        return m;
    }
    case ShapeFamily::Rings: {
        const double ro = rng.uniform(0.14 * s, 0.24 * s);
        const double ri = ro * rng.uniform(0.45, 0.65);
        const double cy = rng.uniform(ro + 1.0, s - ro - 2.0);
        const double cx = rng.uniform(ro + 1.0, s - ro - 2.0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
                m(r, c) = (d2 <= ro * ro && d2 >= ri * ri) ? 1 : 0;
            }
        return m;
    }
    case ShapeFamily::Blobs: {
        const double cy = rng.uniform(0.3 * s, 0.7 * s);
        const double cx = rng.uniform(0.3 * s, 0.7 * s);
        double by[3], bx[3], bs[3];
        for (int k = 0; k < 3; ++k) {
            by[k] = cy + rng.uniform(-0.15 * s, 0.15 * s);
            bx[k] = cx + rng.uniform(-0.15 * s, 0.15 * s);
            bs[k] = rng.uniform(0.06 * s, 0.11 * s);
        }
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                double f = 0.0;
                for (int k = 0; k < 3; ++k)
                    f += std::exp(-((r - by[k]) * (r - by[k]) + (c - bx[k]) * (c - bx[k])) / (2.0 * bs[k] * bs[k]));
                m(r, c) = f >= 0.5 ? 1 : 0;
            }
        return m;
    }
    case ShapeFamily::Vessels: {
        const bool vertical = rng.uniform() < 0.5;
        const double base = rng.uniform(0.2 * s, 0.8 * s);
        const double amp = rng.uniform(0.05 * s, 0.15 * s);
        const double period = rng.uniform(0.6 * s, 1.5 * s);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double half = 0.5 * rng.uniform(1.5, 3.0);
        const double k = 2.0 * std::numbers::pi / period;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double along = vertical ? r : c;
                const double across = vertical ? c : r;
                const double centre = base + amp * std::sin(k * along + phase);
                const double slope = amp * k * std::cos(k * along + phase);
                m(r, c) = std::abs(across - centre) <= half * std::sqrt(1.0 + slope * slope) ? 1 : 0;
            }
        return m;
    }
    }
    return m;
}

// PNM header token reader that skips whitespace and # comments.
std::string pnm_token(std::istream& is)
{
    std::string tok;
    int ch;
    while ((ch = is.get()) != EOF) {
        if (ch == '#') {
            while ((ch = is.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

struct Raster {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> interleaved;
};

Raster read_pnm(const fs::path& path, std::istream& is)
{
    const std::string magic = pnm_token(is);
    const int channels = magic == "P5" ? 1 : magic == "P6" ? 3 : 0;
    if (channels == 0)
        throw DecodeError(path.string() + ": not a binary PGM/PPM file");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(pnm_token(is));
        h = std::stoi(pnm_token(is));
        maxval = std::stoi(pnm_token(is));
    } catch (const std::exception&) {
        throw DecodeError(path.string() + ": malformed PNM header");
    }
    if (w < 1 || h < 1 || w > 65536 || h > 65536 || maxval < 1 || maxval > 255)
        throw DecodeError(path.string() + ": unsupported PNM dimensions or maxval");
    Raster r{h, w, channels, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w * channels)};
    is.read(reinterpret_cast<char*>(r.interleaved.data()), static_cast<std::streamsize>(r.interleaved.size()));
    if (static_cast<std::size_t>(is.gcount()) != r.interleaved.size())
        throw DecodeError(path.string() + ": truncated PNM data");
    if (maxval != 255)
        for (auto& v : r.interleaved)
            v = static_cast<std::uint8_t>(std::lround(255.0 * std::min<int>(v, maxval) / maxval));
    return r;
}

Raster read_png(const fs::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw DecodeError(path.string() + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Raster r{static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1, {}};
    r.interleaved.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, r.interleaved.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError(path.string() + ": " + msg);
    }
    return r;
}

Raster read_raster(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open " + path.string());
    unsigned char sig[8] = {};
    is.read(reinterpret_cast<char*>(sig), 8);
    if (is.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0) {
        is.close();
        return read_png(path);
    }
    is.clear();
    is.seekg(0);
    return read_pnm(path, is);
}

void ensure_parent(const fs::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
}

void write_raster(const fs::path& path, const Raster& r)
{
    ensure_parent(path);
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
        png_image image{};
        image.version = PNG_IMAGE_VERSION;
        image.width = static_cast<png_uint_32>(r.width);
        image.height = static_cast<png_uint_32>(r.height);
        image.format = r.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
        if (!png_image_write_to_file(&image, path.string().c_str(), 0, r.interleaved.data(), 0, nullptr))
            throw IoError(path.string() + ": " + image.message);
        return;
    }
    if (ext != ".pgm" && ext != ".ppm")
        throw IoError(path.string() + ": unsupported image extension (use .pgm, .ppm or .png)");
    if ((ext == ".pgm") != (r.channels == 1))
        throw IoError(path.string() + ": " + (r.channels == 1 ? "grayscale images need .pgm or .png"
                                                              : "RGB images need .ppm or .png"));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    os << (r.channels == 1 ? "P5" : "P6") << '\n' << r.width << ' ' << r.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(r.interleaved.data()), static_cast<std::streamsize>(r.interleaved.size()));
    if (!os)
        throw IoError("failed writing " + path.string());
}

}  // namespace

const char* to_string(ShapeFamily family)
{
    switch (family) {
    case ShapeFamily::Disks:
        return "disks";
    case ShapeFamily::Rectangles:
        return "rectangles";
    case ShapeFamily::Rings:
        return "rings";
    case ShapeFamily::Blobs:
        return "blobs";
    case ShapeFamily::Vessels:
        return "vessels";
    }
    return "?";
}

ShapeFamily shape_family_from_string(const std::string& name)
{
    for (ShapeFamily f : {ShapeFamily::Disks, ShapeFamily::Rectangles, ShapeFamily::Rings, ShapeFamily::Blobs,
                          ShapeFamily::Vessels})
        if (name == to_string(f))
            return f;
    throw InvalidArgument("unknown shape family '" + name + "'");
}

void SyntheticSpec::validate() const
{
    if (count < 1)
        throw InvalidArgument("synthetic count must be >= 1");
    if (size < 8)
        throw InvalidArgument("synthetic size must be >= 8");
    if (!(foreground >= 0.0 && foreground <= 1.0 && background >= 0.0 && background <= 1.0))
        throw InvalidArgument("intensity means must lie in [0,1]");
    if (!(sigma >= 0.0))
        throw InvalidArgument("noise sigma must be >= 0");
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
        throw InvalidArgument("test_fraction must lie in [0,1]");
    if (min_shapes < 1 || max_shapes < min_shapes)
        throw InvalidArgument("need 1 <= min_shapes <= max_shapes");
}

nlohmann::json SyntheticSpec::to_json() const
{
    return {{"count", count},
            {"size", size},
            {"family", to_string(family)},
            {"foreground", foreground},
            {"background", background},
            {"sigma", sigma},
            {"seed", seed},
            {"test_fraction", test_fraction},
            {"min_shapes", min_shapes},
            {"max_shapes", max_shapes}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j)
{
    SyntheticSpec s;
    try {
        s.count = j.value("count", s.count);
        s.size = j.value("size", s.size);
        if (j.contains("family"))
            s.family = shape_family_from_string(j.at("family").get<std::string>());
        s.foreground = j.value("foreground", s.foreground);
        s.background = j.value("background", s.background);
        s.sigma = j.value("sigma", s.sigma);
        s.seed = j.value("seed", s.seed);
        s.test_fraction = j.value("test_fraction", s.test_fraction);
        s.min_shapes = j.value("min_shapes", s.min_shapes);
        s.max_shapes = j.value("max_shapes", s.max_shapes);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::string SyntheticSpec::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int SyntheticSpec::test_count() const { return static_cast<int>(std::floor(count * test_fraction + 1e-9)); }

BinaryMask rasterize_disk(int height, int width, double cy, double cx, double radius)
{
    BinaryMask m(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
            m(r, c) = (dy * dy + dx * dx <= radius * radius) ? 1 : 0;
        }
    return m;
}

Sample generate_sample(const SyntheticSpec& spec, int index)
{
    spec.validate();
    ad::Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));
    const int n = spec.size;
    BinaryMask mask(n, n);
    const int shapes = spec.min_shapes +
                       static_cast<int>(rng.uniform() * (spec.max_shapes - spec.min_shapes + 1));
    for (int k = 0; k < std::min(shapes, spec.max_shapes); ++k)
        paint(mask, make_shape(spec.family, n, rng));
    std::vector<double> values(static_cast<std::size_t>(n) * n);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double base = mask.bits[i] ? spec.foreground : spec.background;
        const double noise = spec.sigma > 0.0 ? rng.normal(0.0, spec.sigma) : 0.0;
        values[i] = std::clamp(base + noise, 0.0, 1.0);
    }
    return {ImageTensor(n, n, 1, std::move(values)), std::move(mask)};
}

std::vector<Sample> generate_samples(const SyntheticSpec& spec)
{
    spec.validate();
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i)
        out.push_back(generate_sample(spec, i));
    return out;
}

fs::path DatasetManifest::resolve(const std::string& p) const
{
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

DatasetManifest generate(const SyntheticSpec& spec, const fs::path& out_dir)
{
    spec.validate();
    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    const std::string hash = spec.hash();
    const int first_test = spec.count - spec.test_count();
    for (int i = 0; i < spec.count; ++i) {
        const Sample s = generate_sample(spec, i);
        char name[32];
        std::snprintf(name, sizeof(name), "%04d", i);
        const std::string img = std::string("img_") + name + ".pgm";
        const std::string msk = std::string("mask_") + name + ".pgm";
        write_image(out_dir / img, s.image);
        write_mask(out_dir / msk, s.mask);
        manifest.entries.push_back({img, msk, i >= first_test ? "test" : "train", hash});
    }
    write_manifest(out_dir / "manifest.jsonl", manifest);
    std::ofstream spec_out(out_dir / "spec.json", std::ios::trunc);
    spec_out << spec.to_json().dump(2) << '\n';
    return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest)
{
    ensure_parent(path);
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    for (const ManifestEntry& e : manifest.entries) {
        nlohmann::json j{{"image", e.image}, {"mask", e.mask}, {"split", e.split}};
        if (!e.spec_hash.empty())
            j["spec_hash"] = e.spec_hash;
        os << j.dump() << '\n';
    }
    if (!os)
        throw IoError("failed writing " + path.string());
}

DatasetManifest read_manifest(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open manifest " + path.string());
    DatasetManifest m;
    m.base_dir = path.parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestEntry e;
            e.image = j.at("image").get<std::string>();
            e.mask = j.at("mask").get<std::string>();
            e.split = j.value("split", std::string("train"));
            e.spec_hash = j.value("spec_hash", std::string());
            m.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw DecodeError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return m;
}

ImageTensor read_image(const fs::path& path)
{
    const Raster r = read_raster(path);
    const std::size_t plane = static_cast<std::size_t>(r.height) * r.width;
    std::vector<double> values(plane * r.channels);
    for (int ch = 0; ch < r.channels; ++ch)
        for (std::size_t i = 0; i < plane; ++i)
            values[ch * plane + i] = r.interleaved[i * r.channels + ch] / 255.0;
    return ImageTensor(r.height, r.width, r.channels, std::move(values));
}

void write_image(const fs::path& path, const ImageTensor& image)
{
    Raster r{image.height(), image.width(), image.channels(), {}};
    const std::size_t plane = image.plane_size();
    r.interleaved.resize(plane * r.channels);
    for (int ch = 0; ch < r.channels; ++ch) {
        const auto p = image.plane(ch);
        for (std::size_t i = 0; i < plane; ++i)
            r.interleaved[i * r.channels + ch] = quantize(p[i]);
    }
    write_raster(path, r);
}

BinaryMask read_mask(const fs::path& path)
{
    const Raster r = read_raster(path);
    if (r.channels != 1)
        throw DecodeError(path.string() + ": masks must be single-channel");
    BinaryMask m(r.height, r.width);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        const std::uint8_t v = r.interleaved[i];
        if (v != 0 && v != 1 && v != 255)
            throw DecodeError(path.string() + ": mask is not binary (value " + std::to_string(v) + ")");
        m.bits[i] = v != 0 ? 1 : 0;
    }
    return m;
}

void write_mask(const fs::path& path, const BinaryMask& mask)
{
    Raster r{mask.height, mask.width, 1, std::vector<std::uint8_t>(mask.bits.size())};
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        r.interleaved[i] = mask.bits[i] ? 255 : 0;
    write_raster(path, r);
}

ImageTensor mask_to_image(const BinaryMask& mask)
{
    std::vector<double> v(mask.bits.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = mask.bits[i] ? 1.0 : 0.0;
    return ImageTensor(mask.height, mask.width, 1, std::move(v));
}

Dataset load_dataset(const DatasetManifest& manifest, const std::string& split)
{
    Dataset d;
    for (const ManifestEntry& e : manifest.entries) {
        if (!split.empty() && e.split != split)
            continue;
        Sample s{read_image(manifest.resolve(e.image)), read_mask(manifest.resolve(e.mask))};
        if (s.image.height() != s.mask.height || s.image.width() != s.mask.width)
            throw DecodeError("image " + e.image + " and mask " + e.mask + " differ in size");
        d.samples.push_back(std::move(s));
    }
    return d;
}

Dataset synthetic_dataset(const SyntheticSpec& spec, const std::string& split)
{
    Dataset d;
    const int first_test = spec.count - spec.test_count();
    for (int i = 0; i < spec.count; ++i) {
        const bool is_test = i >= first_test;
        if (split.empty() || (split == "test") == is_test)
            d.samples.push_back(generate_sample(spec, i));
    }
    return d;
}

ImageTensor compose_panel(const std::vector<std::vector<ImageTensor>>& rows, int gap)
{
    if (rows.empty())
        throw InvalidArgument("panel needs at least one row");
    int total_h = 0, total_w = 0;
    for (const auto& row : rows) {
        if (row.empty())
            throw InvalidArgument("panel rows must be non-empty");
        int w = 0;
        for (const auto& t : row) {
            if (t.height() != row.front().height())
                throw ShapeMismatch("panel tiles in a row must share a height");
            w += t.width() + gap;
        }
        total_w = std::max(total_w, w - gap);
        total_h += row.front().height() + gap;
    }
    total_h -= gap;
    const std::size_t plane = static_cast<std::size_t>(total_h) * total_w;
    std::vector<double> out(plane * 3, 1.0);
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (const auto& t : row) {
            for (int ch = 0; ch < 3; ++ch)
                for (int r = 0; r < t.height(); ++r)
                    for (int c = 0; c < t.width(); ++c)
                        out[ch * plane + static_cast<std::size_t>(y + r) * total_w + x + c] =
                            t.at(t.channels() == 3 ? ch : 0, r, c);
            x += t.width() + gap;
        }
        y += row.front().height() + gap;
    }
    return ImageTensor(total_h, total_w, 3, std::move(out));
}

}  // namespace vmtu
