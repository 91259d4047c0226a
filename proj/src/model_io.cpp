#include "snnw/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace snnw {
namespace {

class Writer {
public:
    template <typename U>
    void put(U v) {
        static_assert(std::is_integral_v<U>);
        using Unsigned = std::make_unsigned_t<U>;
        auto u = static_cast<Unsigned>(v);
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
    void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put_raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <typename U>
    U get() {
        need(sizeof(U));
        std::make_unsigned_t<U> u = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            u |= static_cast<std::make_unsigned_t<U>>(static_cast<std::make_unsigned_t<U>>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(U);
        return static_cast<U>(u);
    }
    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw ModelFileError(ModelFileError::Kind::truncated, "model file is truncated");
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

// Guards against absurd counts in damaged headers before allocating.
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxPartName = 4096;

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedPartNetwork& net) {
    Writer w;
    w.put_raw(kModelMagic, sizeof kModelMagic);
    w.put(kModelVersion);
    const auto& name = net.part.name();
    w.put(static_cast<std::uint32_t>(name.size()));
    w.put_raw(name.data(), name.size());

    const auto& spec = net.spec();
    w.put(spec.input_rows);
    w.put(spec.input_cols);
    w.put(spec.channels);
    w.put(static_cast<std::uint32_t>(spec.conv_blocks.size()));
    for (const auto& b : spec.conv_blocks) {
        w.put(b.filters);
        w.put(b.kernel);
    }
    w.put(static_cast<std::uint32_t>(spec.dense_widths.size()));
    for (auto d : spec.dense_widths) w.put(d);
    w.put_f64(spec.dropout_rate);

    w.put(net.meta.seed);
    w.put(net.meta.epochs_run);
    w.put(net.meta.best_epoch);
    w.put_f32(net.meta.best_val_accuracy);
    w.put_f32(net.meta.best_val_loss);
    w.put_f32(net.meta.final_train_loss);

    w.put(static_cast<std::uint64_t>(net.net.parameter_count()));
    for (const auto* t : net.net.parameters()) {
        for (float v : t->data()) w.put_f32(v);
    }
    return w.take();
}

TrainedPartNetwork deserialize_model(const std::vector<std::uint8_t>& bytes) {
    using Kind = ModelFileError::Kind;
    if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
        throw ModelFileError(Kind::not_a_model, "not a model file (bad magic)");
    }
    Reader r(bytes);
    r.get_string(sizeof kModelMagic);
    const auto version = r.get<std::uint16_t>();
    if (version != kModelVersion) {
        throw ModelFileError(Kind::version_mismatch, "model file version " + std::to_string(version) +
                                                         " is not supported (expected " +
                                                         std::to_string(kModelVersion) + ")");
    }
    const auto name_len = r.get<std::uint32_t>();
    if (name_len == 0 || name_len > kMaxPartName) throw ModelFileError(Kind::corrupt, "model file has an invalid part id");
    PartId part(r.get_string(name_len));

    PartNetworkSpec spec;
    spec.input_rows = r.get<std::uint32_t>();
    spec.input_cols = r.get<std::uint32_t>();
    spec.channels = r.get<std::uint32_t>();
    const auto n_conv = r.get<std::uint32_t>();
    if (n_conv > kMaxLayers) throw ModelFileError(Kind::corrupt, "model file has an implausible conv block count");
    spec.conv_blocks.resize(n_conv);
    for (auto& b : spec.conv_blocks) {
        b.filters = r.get<std::uint32_t>();
        b.kernel = r.get<std::uint32_t>();
    }
    const auto n_dense = r.get<std::uint32_t>();
    if (n_dense > kMaxLayers) throw ModelFileError(Kind::corrupt, "model file has an implausible dense layer count");
    spec.dense_widths.resize(n_dense);
    for (auto& d : spec.dense_widths) d = r.get<std::uint32_t>();
    spec.dropout_rate = r.get_f64();

    TrainingMeta meta;
    meta.seed = r.get<std::uint64_t>();
    meta.epochs_run = r.get<std::uint32_t>();
    meta.best_epoch = r.get<std::int32_t>();
    meta.best_val_accuracy = r.get_f32();
    meta.best_val_loss = r.get_f32();
    meta.final_train_loss = r.get_f32();

    try {
        validate_part_spec(spec);
    } catch (const std::invalid_argument& e) {
        throw ModelFileError(Kind::corrupt, std::string("model file spec is invalid: ") + e.what());
    }

    TrainedPartNetwork net{std::move(part), nn::ConvNet<float>(spec), meta};
    const auto count = r.get<std::uint64_t>();
    if (count != net.net.parameter_count()) {
        throw ModelFileError(Kind::corrupt, "model file parameter count " + std::to_string(count) +
                                                " does not match its spec (" +
                                                std::to_string(net.net.parameter_count()) + ")");
    }
    if (r.remaining() < count * 4) throw ModelFileError(Kind::truncated, "model file is truncated");
    for (auto* t : net.net.parameters()) {
        for (auto& v : t->data()) v = r.get_f32();
    }
    if (r.remaining() != 0) throw ModelFileError(Kind::corrupt, "model file has trailing bytes");
    return net;
}

void save_model(const TrainedPartNetwork& net, const std::filesystem::path& path) {
    const auto bytes = serialize_model(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelFileError(ModelFileError::Kind::io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ModelFileError(ModelFileError::Kind::io, "failed writing '" + path.string() + "'");
}

TrainedPartNetwork load_model(const std::filesystem::path& path, const std::optional<PartId>& expected_part) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelFileError(ModelFileError::Kind::io, "cannot open model file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto net = deserialize_model(bytes);
    if (expected_part && net.part != *expected_part) {
        throw ModelFileError(ModelFileError::Kind::part_mismatch, "model '" + path.string() + "' detects part '" +
                                                                      net.part.name() + "', slot expects '" +
                                                                      expected_part->name() + "'");
    }
    return net;
}

}  // namespace snnw
