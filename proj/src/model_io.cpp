#include <cstring>

#include "kanfire/cheby_kan.hpp"
#include "kanfire/error.hpp"
#include "kanfire/file_util.hpp"

namespace kanfire {

namespace {

void put_reals(ByteWriter& w, const std::vector<double>& values) {
    for (double v : values) w.put(static_cast<float>(v));
}

std::vector<double> get_reals(ByteReader& r, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = static_cast<double>(r.get<float>());
    return out;
}

// Guards against absurd sizes from corrupt headers before allocating.
std::size_t checked_count(std::uint32_t n, std::size_t limit, const char* what) {
    if (n > limit) throw FormatError(std::string("corrupt model file: implausible ") + what);
    return n;
}

}  // namespace

std::string serialize_model(const ChebyKanModel& model) {
    model.validate();
    ByteWriter w;
    w.put_raw(std::string_view(kModelMagic, sizeof kModelMagic));
    w.put(kModelVersion);
    w.put(static_cast<std::uint32_t>(model.layer_dims.size()));
    for (auto d : model.layer_dims) w.put(static_cast<std::uint32_t>(d));
    w.put(static_cast<std::uint32_t>(model.degree));
    w.put(static_cast<float>(model.dropout_rate));
    w.put(static_cast<std::uint64_t>(model.seed));
    w.put(static_cast<std::uint32_t>(model.band_names.size()));
    for (const auto& name : model.band_names) w.put_string(name);
    put_reals(w, model.feature_means);
    put_reals(w, model.feature_stds);
    for (const auto& bn : model.batch_norms) {
        w.put(static_cast<float>(bn.momentum));
        w.put(static_cast<float>(bn.epsilon));
        put_reals(w, bn.gamma);
        put_reals(w, bn.beta);
        put_reals(w, bn.running_mean);
        put_reals(w, bn.running_var);
    }
    for (const auto& layer : model.layers) put_reals(w, layer.coeffs);
    const auto checksum = fnv1a64(w.bytes());
    w.put(checksum);
    return w.take();
}

ChebyKanModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
        throw FormatError("not a model file");
    }
    if (bytes.size() < sizeof kModelMagic + 4 + 8) throw FormatError("truncated model file");
    ByteReader r(bytes);
    r.get_raw(sizeof kModelMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kModelVersion) {
        throw FormatError("model file version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kModelVersion) + ")");
    }

    // The checksum covers everything but its own 8 bytes.
    ByteReader tail(bytes.substr(bytes.size() - 8));
    const auto stored = tail.get<std::uint64_t>();
    const auto body = bytes.substr(0, bytes.size() - 8);
    const bool checksum_ok = fnv1a64(body) == stored;

    ChebyKanModel m;
    try {
        ByteReader br(body);
        br.get_raw(sizeof kModelMagic + 4);
        const auto n_dims = checked_count(br.get<std::uint32_t>(), 64, "layer count");
        for (std::size_t i = 0; i < n_dims; ++i) {
            m.layer_dims.push_back(checked_count(br.get<std::uint32_t>(), 1u << 20, "layer width"));
        }
        m.degree = static_cast<int>(checked_count(br.get<std::uint32_t>(), 64, "degree"));
        m.dropout_rate = static_cast<double>(br.get<float>());
        m.seed = br.get<std::uint64_t>();
        const auto n_bands = checked_count(br.get<std::uint32_t>(), 1u << 16, "band count");
        for (std::size_t i = 0; i < n_bands; ++i) m.band_names.push_back(br.get_string());
        if (m.layer_dims.size() < 2) throw FormatError("corrupt model file: too few layers");
        const auto in = m.layer_dims.front();
        m.feature_means = get_reals(br, in);
        m.feature_stds = get_reals(br, in);
        for (std::size_t h = 1; h + 1 < m.layer_dims.size(); ++h) {
            BatchNormState bn;
            bn.momentum = static_cast<double>(br.get<float>());
            bn.epsilon = static_cast<double>(br.get<float>());
            bn.gamma = get_reals(br, m.layer_dims[h]);
            bn.beta = get_reals(br, m.layer_dims[h]);
            bn.running_mean = get_reals(br, m.layer_dims[h]);
            bn.running_var = get_reals(br, m.layer_dims[h]);
            m.batch_norms.push_back(std::move(bn));
        }
        for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
            ChebyLayer layer(m.layer_dims[l], m.layer_dims[l + 1], m.degree);
            layer.coeffs = get_reals(br, layer.coeffs.size());
            m.layers.push_back(std::move(layer));
        }
        if (br.remaining() != 0) throw FormatError("corrupt model file: trailing bytes");
    } catch (const FormatError&) {
        if (!checksum_ok) throw FormatError("truncated or corrupt model file (checksum mismatch)");
        throw;
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    if (!checksum_ok) throw FormatError("corrupt model file (checksum mismatch)");
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    return m;
}

void save_model(const ChebyKanModel& model, const std::filesystem::path& path) {
    atomic_write_file(path, serialize_model(model));
}

ChebyKanModel load_model(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("model file not found: " + path.string());
    return deserialize_model(read_file(path));
}

}  // namespace kanfire
