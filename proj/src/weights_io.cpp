#include <cstdint>

#include "stylerep/bytes.hpp"
#include "stylerep/network.hpp"

namespace stylerep {

namespace {
constexpr char kMagic[4] = {'N', 'S', 'W', '1'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_weight_container(const std::map<std::string, Tensor>& tensors, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) { // std::map: lexicographic order
        if (name.size() > 0xffff)
            throw DataError(str("weight container: tensor name '", name.substr(0, 32),
                                "...' exceeds 65535 bytes"));
        if (t.rank() < 1 || t.rank() > 0xff)
            throw DataError(str("weight container: tensor '", name, "' has unsupported rank ",
                                t.rank()));
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.append(name);
        put_u8(out, static_cast<std::uint8_t>(t.rank()));
        for (int e : t.shape) {
            if (e <= 0) throw DataError(str("weight container: tensor '", name, "' has extent ", e));
            put_u32(out, static_cast<std::uint32_t>(e));
        }
        for (float v : t.data) put_f32(out, v);
    }
    write_file_bytes(path, out);
}

std::map<std::string, Tensor> load_weight_container(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    ByteCursor cur{bytes, 0, path};

    const std::string magic = cur.string(4);
    if (magic != std::string(kMagic, 4))
        throw DataError(str("'", path, "' is not a weight container (bad magic)"));
    const std::uint32_t version = cur.u32();
    if (version != kVersion)
        throw DataError(str("weight container '", path, "': unsupported version ", version));
    const std::uint32_t count = cur.u32();

    std::map<std::string, Tensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = cur.u16();
        const std::string name = cur.string(name_len);
        const int rank = cur.u8();
        if (rank < 1)
            throw DataError(str("weight container '", path, "': tensor '", name, "' has rank 0"));
        std::vector<int> shape(static_cast<std::size_t>(rank));
        std::int64_t numel = 1;
        for (auto& e : shape) {
            const std::uint32_t v = cur.u32();
            if (v == 0 || v > 0x7fffffff)
                throw DataError(str("weight container '", path, "': tensor '", name,
                                    "' has extent ", v));
            e = static_cast<int>(v);
            numel *= e;
        }
        std::vector<float> data(static_cast<std::size_t>(numel));
        for (auto& v : data) v = cur.f32();
        if (!tensors.emplace(name, Tensor(std::move(shape), std::move(data))).second)
            throw DataError(str("weight container '", path, "': duplicate tensor '", name, "'"));
    }
    if (!cur.done())
        throw DataError(str("weight container '", path, "': ", bytes.size() - cur.pos,
                            " trailing bytes after ", count, " tensors"));
    return tensors;
}

void save_weights(const Network& net, const std::string& path) {
    save_weight_container(net.weights, path);
}

Network load_weights(const NetworkSpec& spec, const std::string& path) {
    spec.validate();
    std::map<std::string, Tensor> tensors = load_weight_container(path);

    Network net;
    net.spec = spec;
    for (const auto& l : spec.layers) {
        if (!l.has_weights()) continue;
        for (const char* part : {".weight", ".bias"}) {
            const std::string name = l.name + part;
            auto it = tensors.find(name);
            if (it == tensors.end())
                throw DataError(str("weight container '", path, "': missing tensor '", name, "'"));
            std::vector<int> want;
            if (l.kind == LayerKind::Conv)
                want = part[1] == 'w'
                           ? std::vector<int>{l.out_channels, l.in_channels, l.kernel, l.kernel}
                           : std::vector<int>{l.out_channels};
            else
                want = part[1] == 'w' ? std::vector<int>{l.out_features, l.in_features}
                                      : std::vector<int>{l.out_features};
            if (it->second.shape != want)
                throw DataError(str("weight container '", path, "': tensor '", name, "' is ",
                                    it->second.shape_str(), ", layer '", l.name, "' needs ",
                                    Tensor::shape_string(want)));
            net.weights.emplace(name, std::move(it->second));
            tensors.erase(it);
        }
    }
    if (!tensors.empty())
        throw DataError(str("weight container '", path, "': tensor '", tensors.begin()->first,
                            "' does not bind to any layer"));
    return net;
}

} // namespace stylerep
