#include "lifeseq/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace lifeseq {

namespace {

constexpr char kMagic[4] = {'L', 'S', 'Q', 'C'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("checkpoint '" + path + "' is truncated or corrupt");
    return v;
}

std::string get_string(std::ifstream& in, const std::string& path) {
    const auto n = get<std::uint32_t>(in, path);
    if (n > 4096) throw IoError("checkpoint '" + path + "' is corrupt (absurd name length)");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw IoError("checkpoint '" + path + "' is truncated or corrupt");
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, std::uint64_t vocab_hash,
                     std::uint64_t step) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(kMagic, 4);
        put(out, kVersion);
        put(out, model.config().hash());
        put(out, vocab_hash);
        put(out, step);
        const auto params = model.store().all();
        put(out, static_cast<std::uint32_t>(params.size()));
        for (const Param* p : params) {
            put(out, static_cast<std::uint32_t>(p->name.size()));
            out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
            put(out, static_cast<std::uint32_t>(p->value.rows()));
            put(out, static_cast<std::uint32_t>(p->value.cols()));
            out.write(reinterpret_cast<const char*>(p->value.data()),
                      static_cast<std::streamsize>(p->value.size() * sizeof(real)));
        }
        if (!out) throw IoError("failed while writing '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

CheckpointInfo read_checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not a checkpoint file");
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw IoError("checkpoint '" + path + "' has format version " + std::to_string(version) +
                      ", expected " + std::to_string(kVersion));
    }
    CheckpointInfo info;
    info.config_hash = get<std::uint64_t>(in, path);
    info.vocab_hash = get<std::uint64_t>(in, path);
    info.step = get<std::uint64_t>(in, path);
    return info;
}

CheckpointInfo load_checkpoint(const std::string& path, Model& model, std::uint64_t vocab_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not a checkpoint file");
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw IoError("checkpoint '" + path + "' has format version " + std::to_string(version) +
                      ", expected " + std::to_string(kVersion));
    }
    CheckpointInfo info;
    info.config_hash = get<std::uint64_t>(in, path);
    info.vocab_hash = get<std::uint64_t>(in, path);
    info.step = get<std::uint64_t>(in, path);
    if (info.config_hash != model.config().hash()) {
        throw ValidationError("checkpoint '" + path + "': model config hash mismatch");
    }
    if (info.vocab_hash != vocab_hash) {
        throw ValidationError("checkpoint '" + path + "': vocabulary hash mismatch");
    }
    const auto count = get<std::uint32_t>(in, path);
    if (count != model.store().count()) {
        throw ValidationError("checkpoint '" + path + "': expected " +
                              std::to_string(model.store().count()) + " tensors, found " +
                              std::to_string(count));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = get_string(in, path);
        const auto rows = get<std::uint32_t>(in, path);
        const auto cols = get<std::uint32_t>(in, path);
        Param* p = model.store().find(name);
        if (!p) throw ValidationError("checkpoint '" + path + "': unknown tensor '" + name + "'");
        if (p->value.rows() != static_cast<int>(rows) || p->value.cols() != static_cast<int>(cols)) {
            throw ValidationError("checkpoint '" + path + "': tensor '" + name + "' has shape " +
                                  std::to_string(rows) + "x" + std::to_string(cols) +
                                  ", model expects " + std::to_string(p->value.rows()) + "x" +
                                  std::to_string(p->value.cols()));
        }
        in.read(reinterpret_cast<char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(real)));
        if (!in) throw IoError("checkpoint '" + path + "' is truncated or corrupt");
    }
    return info;
}

}  // namespace lifeseq
