#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/network.hpp"

namespace pgvc {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<std::uint8_t, 4> kMagic{'P', 'G', 'V', 'C'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (offset + sizeof(T) > bytes.size()) throw FormatError("checkpoint truncated");
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

nlohmann::ordered_json config_to_json(const NetworkConfig& c) {
    nlohmann::ordered_json j;
    j["base_channels"] = c.base_channels;
    j["window_frames"] = c.window_frames;
    j["height"] = c.height;
    j["width"] = c.width;
    j["timesteps"] = c.timesteps;
    j["beta_start"] = c.beta_start;
    j["beta_end"] = c.beta_end;
    j["palette_dim"] = c.palette_dim;
    return j;
}

NetworkConfig config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.base_channels = j.at("base_channels").get<int>();
    c.window_frames = j.at("window_frames").get<int>();
    c.height = j.at("height").get<int>();
    c.width = j.at("width").get<int>();
    c.timesteps = j.at("timesteps").get<int>();
    c.beta_start = j.at("beta_start").get<double>();
    c.beta_end = j.at("beta_end").get<double>();
    c.palette_dim = j.at("palette_dim").get<int>();
    return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    ckpt.config.validate();
    const auto specs = parameter_specs(ckpt.config);
    nlohmann::ordered_json header;
    header["config"] = config_to_json(ckpt.config);
    header["metadata"] = {{"steps", ckpt.metadata.steps},
                          {"final_loss", ckpt.metadata.final_loss},
                          {"seed", ckpt.metadata.seed}};
    header["tensors"] = nlohmann::json::array();
    std::vector<const AlignedVector<float>*> tensors;
    ckpt.params.for_each([&](const AlignedVector<float>& v) { tensors.push_back(&v); });
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (tensors[i]->size() != specs[i].numel())
            throw InvalidArgument("checkpoint tensor " + specs[i].name + " has the wrong size");
        header["tensors"].push_back({{"name", specs[i].name}, {"shape", specs[i].shape}, {"offset", offset}});
        offset += specs[i].numel() * sizeof(float);
    }
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto* t : tensors) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(t->data());
        out.insert(out.end(), p, p + t->size() * sizeof(float));
    }
    return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError("not a checkpoint file (bad magic)");
    const auto version = get<std::uint32_t>(bytes, 4);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto header_len = get<std::uint64_t>(bytes, 8);
    constexpr std::size_t kPrefix = 16;
    if (header_len > bytes.size() - kPrefix) throw FormatError("checkpoint header length exceeds file size");

    Checkpoint ckpt;
    std::vector<TensorSpec> stored;
    std::vector<std::uint64_t> offsets;
    try {
        const auto header =
            nlohmann::json::parse(bytes.begin() + kPrefix, bytes.begin() + kPrefix + static_cast<std::ptrdiff_t>(header_len));
        ckpt.config = config_from_json(header.at("config"));
        const auto& meta = header.at("metadata");
        ckpt.metadata.steps = meta.at("steps").get<std::int64_t>();
        ckpt.metadata.final_loss = meta.at("final_loss").get<double>();
        ckpt.metadata.seed = meta.at("seed").get<std::uint64_t>();
        for (const auto& t : header.at("tensors")) {
            stored.push_back({t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>()});
            offsets.push_back(t.at("offset").get<std::uint64_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed checkpoint header: ") + e.what());
    }
    try {
        ckpt.config.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("checkpoint config invalid: ") + e.what());
    }

    const auto expected = parameter_specs(ckpt.config);
    if (stored.size() != expected.size())
        throw FormatError("checkpoint tensor table has " + std::to_string(stored.size()) + " entries, expected " +
                          std::to_string(expected.size()));
    const std::size_t data_start = kPrefix + header_len;
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (stored[i].name != expected[i].name) throw FormatError("checkpoint tensor " + std::to_string(i) +
                                                                  " is '" + stored[i].name + "', expected '" +
                                                                  expected[i].name + "'");
        if (stored[i].shape != expected[i].shape) throw FormatError("checkpoint tensor " + expected[i].name +
                                                                    " has the wrong shape");
        if (offsets[i] != running) throw FormatError("checkpoint tensor " + expected[i].name + " has a bad offset");
        running += expected[i].numel() * sizeof(float);
    }
    if (data_start + running != bytes.size()) throw FormatError("checkpoint data size does not match tensor table");

    std::size_t i = 0;
    ckpt.params.for_each([&](AlignedVector<float>& v) {
        v.resize(expected[i].numel());
        std::memcpy(v.data(), bytes.data() + data_start + offsets[i], v.size() * sizeof(float));
        ++i;
    });
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("missing checkpoint: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace pgvc
