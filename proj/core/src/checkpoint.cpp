#include "stegattn/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace stegattn {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'G', 'A'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size())
            throw DataError(std::string("checkpoint truncated while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

nlohmann::json config_to_json(const TrainConfig& c) {
    return {
        {"seed", c.seed},
        {"image_size", c.image_size},
        {"batch_size", c.batch_size},
        {"steps", c.steps},
        {"learning_rate", c.learning_rate},
        {"beta", c.beta},
        {"mode", mode_token(c.mode)},
        {"data_dir", c.data_dir},
        {"reduction_ratio", c.reduction_ratio},
        {"decoder_attention", c.decoder_attention},
    };
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.image_size = j.at("image_size").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.steps = j.at("steps").get<int>();
    c.learning_rate = j.at("learning_rate").get<float>();
    c.beta = j.at("beta").get<float>();
    auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw DataError("checkpoint config has unknown mode");
    c.mode = *mode;
    c.data_dir = j.at("data_dir").get<std::string>();
    c.reduction_ratio = j.at("reduction_ratio").get<int>();
    c.decoder_attention = j.at("decoder_attention").get<bool>();
    return c;
}

}  // namespace

void save_checkpoint(const StegoModelParams<float>& params, const TrainConfig& config,
                     const std::string& path) {
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);

    std::string cfg = config_to_json(config).dump();
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;

    std::uint32_t entries = 0;
    for_each_param(params, [&](const std::string&, const Tensor<float>&) { ++entries; });
    put_u32(out, entries);
    for_each_param(params, [&](const std::string& name, const Tensor<float>& t) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, 4);
        for (int e : {t.n, t.c, t.h, t.w}) put_u32(out, static_cast<std::uint32_t>(e));
    });

    std::string payload;
    for_each_param(params, [&](const std::string&, const Tensor<float>& t) {
        for (float v : t.data) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(payload, bits);
        }
    });
    out += payload;
    put_u32(out, static_cast<std::uint32_t>(
                     crc32(0, reinterpret_cast<const Bytef*>(payload.data()),
                           static_cast<uInt>(payload.size()))));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open checkpoint for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("failed writing checkpoint: " + path);
}

std::pair<StegoModelParams<float>, TrainConfig> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};

    if (r.bytes(4, "magic") != std::string(kMagic, 4))
        throw DataError("not a checkpoint file (bad magic): " + path);
    std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw DataError("checkpoint format version " + std::to_string(version) +
                        " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");

    std::uint32_t cfg_len = r.u32("config length");
    TrainConfig config;
    try {
        config = config_from_json(nlohmann::json::parse(r.bytes(cfg_len, "config")));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint config is not valid JSON: ") + e.what());
    }

    auto params = StegoModelParams<float>::zeros(config.mode, config.beta,
                                                 config.reduction_ratio,
                                                 config.decoder_attention);
    struct Expected {
        std::string name;
        Tensor<float>* tensor;
    };
    std::vector<Expected> expected;
    for_each_param(params, [&](const std::string& name, Tensor<float>& t) {
        expected.push_back({name, &t});
    });

    // Full manifest validation before any payload byte is read.
    std::uint32_t entries = r.u32("manifest count");
    if (entries != expected.size())
        throw DataError("checkpoint manifest has " + std::to_string(entries) +
                        " entries, model needs " + std::to_string(expected.size()));
    std::size_t total_values = 0;
    for (std::uint32_t i = 0; i < entries; ++i) {
        std::uint32_t name_len = r.u32("manifest name length");
        std::string name = r.bytes(name_len, "manifest name");
        std::uint32_t rank = r.u32("manifest rank");
        if (rank != 4) throw DataError("manifest entry " + name + " has rank " +
                                       std::to_string(rank) + ", expected 4");
        std::uint32_t ext[4];
        for (auto& e : ext) e = r.u32("manifest extent");
        const Tensor<float>& t = *expected[i].tensor;
        if (name != expected[i].name)
            throw DataError("manifest entry " + std::to_string(i) + " is '" + name +
                            "', expected '" + expected[i].name + "'");
        if (static_cast<int>(ext[0]) != t.n || static_cast<int>(ext[1]) != t.c ||
            static_cast<int>(ext[2]) != t.h || static_cast<int>(ext[3]) != t.w)
            throw DataError("manifest shape for " + name + " does not match model (" +
                            t.shape_str() + ")");
        total_values += t.size();
    }
    if (buf.size() - r.pos != total_values * 4 + 4)
        throw DataError("checkpoint payload length disagrees with manifest: have " +
                        std::to_string(buf.size() - r.pos - 4) + " bytes, manifest needs " +
                        std::to_string(total_values * 4));

    std::size_t payload_start = r.pos;
    for (auto& e : expected)
        for (float& v : e.tensor->data) {
            std::uint32_t bits = r.u32("payload");
            std::memcpy(&v, &bits, 4);
        }
    std::uint32_t stored_crc = r.u32("crc32");
    std::uint32_t actual_crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(buf.data() + payload_start),
              static_cast<uInt>(total_values * 4)));
    if (stored_crc != actual_crc) throw DataError("checkpoint payload CRC mismatch");

    return {std::move(params), config};
}

}  // namespace stegattn
