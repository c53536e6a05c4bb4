#include "advdet/model_io.hpp"

#include <cstring>
#include <stdexcept>

#include "advdet/fsutil.hpp"
#include "json.hpp"

namespace advdet {

namespace {

using json = nlohmann::ordered_json;

void append_f32_le(std::string& out, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

float read_f32_le(const std::string& s, size_t off) {
    uint32_t u = static_cast<uint32_t>(static_cast<unsigned char>(s[off])) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(s[off + 1])) << 8) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(s[off + 2])) << 16) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(s[off + 3])) << 24);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

json layer_to_json(const LayerSpec& l) {
    json j;
    j["type"] = layer_kind_name(l.kind);
    if (l.kind == LayerKind::Conv2d) {
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        j["kernel"] = l.kernel;
    } else if (l.kind == LayerKind::Dense) {
        j["in_features"] = l.in_features;
        j["out_features"] = l.out_features;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv2d")
        return conv2d(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                      j.at("kernel").get<int>());
    if (type == "relu") return relu();
    if (type == "maxpool2") return maxpool2();
    if (type == "flatten") return flatten();
    if (type == "dense") return dense(j.at("in_features").get<int>(), j.at("out_features").get<int>());
    throw std::runtime_error("model file: unknown layer type '" + type + "'");
}

}  // namespace

void save_classifier(const std::string& path, const Classifier& model) {
    json header;
    header["format_version"] = 1;
    header["kind"] = "classifier";
    header["input_shape"] = {model.input_shape()[0], model.input_shape()[1], model.input_shape()[2]};
    header["num_classes"] = model.num_classes();
    header["seed"] = model.seed();
    json layers = json::array();
    int64_t param_count = 0;
    for (const auto& l : model.layers()) layers.push_back(layer_to_json(l));
    for (const auto& p : model.params()) param_count += p.weight.numel() + p.bias.numel();
    header["layers"] = std::move(layers);
    header["param_count"] = param_count;

    std::string out = header.dump();
    out.push_back('\n');
    out.reserve(out.size() + static_cast<size_t>(param_count) * 4);
    for (const auto& p : model.params()) {
        for (float v : p.weight.data) append_f32_le(out, v);
        for (float v : p.bias.data) append_f32_le(out, v);
    }
    write_file_atomic(path, out);
}

Classifier load_classifier(const std::string& path) {
    const std::string bytes = read_file(path);
    const size_t nl = bytes.find('\n');
    if (nl == std::string::npos) throw std::runtime_error(path + ": missing model header line");
    json header = json::parse(bytes.substr(0, nl));
    if (header.at("format_version").get<int>() != 1)
        throw std::runtime_error(path + ": unsupported model format version");
    std::array<int, 3> input_shape{header.at("input_shape").at(0).get<int>(),
                                   header.at("input_shape").at(1).get<int>(),
                                   header.at("input_shape").at(2).get<int>()};
    std::vector<LayerSpec> layers;
    for (const auto& lj : header.at("layers")) layers.push_back(layer_from_json(lj));

    Classifier model(input_shape, std::move(layers), header.at("num_classes").get<int>(),
                     header.at("seed").get<uint64_t>());

    const int64_t param_count = header.at("param_count").get<int64_t>();
    if (bytes.size() - nl - 1 != static_cast<size_t>(param_count) * 4)
        throw std::runtime_error(path + ": parameter block size mismatch");
    size_t off = nl + 1;
    for (auto& p : model.params()) {
        for (float& v : p.weight.data) {
            v = read_f32_le(bytes, off);
            off += 4;
        }
        for (float& v : p.bias.data) {
            v = read_f32_le(bytes, off);
            off += 4;
        }
    }
    return model;
}

}  // namespace advdet
