#pragma once

#include "vmtu/field.hpp"
#include "vmtu/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vmtu {

enum class ShapeFamily { Disks, Rectangles, Rings, Blobs, Vessels };

const char* to_string(ShapeFamily family);
ShapeFamily shape_family_from_string(const std::string& name);

struct SyntheticSpec {
    int count = 10;
    int size = 64;  // H = W
    ShapeFamily family = ShapeFamily::Disks;
    double foreground = 0.8;
    double background = 0.2;
    double sigma = 0.05;
    std::uint64_t seed = 1;
    double test_fraction = 0.2;  // trailing share of samples tagged "test"
    int min_shapes = 1;
    int max_shapes = 3;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);
    /// FNV-1a over the canonical JSON form, as 16 hex digits.
    std::string hash() const;
    int test_count() const;
};

struct Sample {
    ImageTensor image;
    BinaryMask mask;
};

/// Deterministic in (spec, index); samples use independent derived streams.
Sample generate_sample(const SyntheticSpec& spec, int index);
std::vector<Sample> generate_samples(const SyntheticSpec& spec);

/// Rasterizes a disk by the per-pixel centre distance test.
BinaryMask rasterize_disk(int height, int width, double cy, double cx, double radius);

struct ManifestEntry {
    std::string image;  // as written in the manifest (relative to its directory or absolute)
    std::string mask;
    std::string split;  // "train" or "test"
    std::string spec_hash;
};

struct DatasetManifest {
    std::filesystem::path base_dir;
    std::vector<ManifestEntry> entries;

    std::filesystem::path resolve(const std::string& p) const;
};

/// Writes img_NNNN.pgm, mask_NNNN.pgm and manifest.jsonl under out_dir.
DatasetManifest generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Reads PGM (P5), PPM (P6) or PNG; 8-bit values map to v / 255.
ImageTensor read_image(const std::filesystem::path& path);
/// Format chosen by extension: .pgm, .ppm or .png.
void write_image(const std::filesystem::path& path, const ImageTensor& image);
/// Masks are stored as 0 / 255 grayscale; 0 reads as background and 1 or 255 as foreground.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

ImageTensor mask_to_image(const BinaryMask& mask);

struct Dataset {
    std::vector<Sample> samples;
    bool empty() const noexcept { return samples.empty(); }
    std::size_t size() const noexcept { return samples.size(); }
};

/// Loads every entry whose split matches ("" loads all).
Dataset load_dataset(const DatasetManifest& manifest, const std::string& split);
/// In-memory split of generate_samples without touching the disk.
Dataset synthetic_dataset(const SyntheticSpec& spec, const std::string& split);

/// Lays tiles out row by row on a grid with `gap` white pixels between them.
/// Grayscale tiles are promoted to RGB; tiles in a row must share a height.
ImageTensor compose_panel(const std::vector<std::vector<ImageTensor>>& rows, int gap = 2);

}  // namespace vmtu
