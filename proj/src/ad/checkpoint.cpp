#include "vmtu/ad/checkpoint.hpp"

#include "vmtu/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace vmtu::ad {

namespace {

constexpr char kMagic[8] = {'V', 'M', 'T', 'U', 'C', 'K', 'P', 'T'};

template <typename U>
void put_le(std::ostream& os, U value)
{
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

class Reader {
public:
    Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    template <typename U>
    U get_le()
    {
        unsigned char bytes[sizeof(U)];
        read(bytes, sizeof(U));
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            value |= static_cast<U>(bytes[i]) << (8 * i);
        return value;
    }

    void read(void* dst, std::size_t n)
    {
        is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n)
            throw DecodeError(path_ + ": truncated checkpoint");
    }

    const std::string& path() const { return path_; }

private:
    std::istream& is_;
    std::string path_;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const
{
    for (const auto& [n, t] : tensors)
        if (n == name)
            return &t;
    return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(os, kCheckpointVersion);
    const std::string cfg = ckpt.config.dump();
    put_le<std::uint64_t>(os, cfg.size());
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Shape s = t.shape();
        for (int d : {s.n, s.c, s.h, s.w})
            put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
        for (double v : t.values())
            put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os)
        throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open " + path.string());
    Reader r(is, path.string());
    char magic[8];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DecodeError(path.string() + ": not a checkpoint (bad magic)");
    const auto version = r.get_le<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw DecodeError(path.string() + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    const auto cfg_len = r.get_le<std::uint64_t>();
    if (cfg_len > (1u << 26))
        throw DecodeError(path.string() + ": config block too large");
    std::string cfg(cfg_len, '\0');
    r.read(cfg.data(), cfg.size());
    try {
        ckpt.config = nlohmann::json::parse(cfg);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(path.string() + ": bad config block: " + e.what());
    }

    const auto count = r.get_le<std::uint32_t>();
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto len = r.get_le<std::uint32_t>();
        if (len > 4096)
            throw DecodeError(path.string() + ": tensor name too long");
        std::string name(len, '\0');
        r.read(name.data(), name.size());
        int dims[4];
        for (int& d : dims) {
            d = static_cast<int>(r.get_le<std::uint32_t>());
            if (d < 0 || d > (1 << 24))
                throw DecodeError(path.string() + ": bad shape for tensor " + name);
        }
        const Shape s{dims[0], dims[1], dims[2], dims[3]};
        if (s.size() > (std::size_t{1} << 32))
            throw DecodeError(path.string() + ": tensor " + name + " too large");
        std::vector<double> values(s.size());
        for (double& v : values)
            v = std::bit_cast<double>(r.get_le<std::uint64_t>());
        ckpt.tensors.emplace_back(std::move(name), Tensor(s, std::move(values)));
    }
    return ckpt;
}

}  // namespace vmtu::ad
