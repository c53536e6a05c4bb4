#include "advdet/detector_io.hpp"

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
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((u >> s) & 0xff));
}

float read_f32_le(const std::string& s, size_t off) {
    uint32_t u = 0;
    for (int i = 3; i >= 0; --i) u = (u << 8) | static_cast<unsigned char>(s[off + i]);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace

void save_detector(const std::string& path, const DetectorModel& model) {
    json header;
    header["format_version"] = 1;
    std::string blob;
    if (const SvmModel* svm = std::get_if<SvmModel>(&model)) {
        header["kind"] = "svm-rbf";
        header["dimension"] = svm->dimension();
        header["C"] = svm->C;
        header["gamma"] = svm->gamma;
        header["bias"] = svm->bias;
        header["num_support_vectors"] = svm->support_vectors.size();
        header["feature_mean"] = svm->feature_mean;
        header["feature_std"] = svm->feature_std;
        for (const auto& sv : svm->support_vectors)
            for (float v : sv) append_f32_le(blob, v);
        for (double c : svm->dual_coefs) append_f32_le(blob, static_cast<float>(c));
    } else {
        const StumpModel& stump = std::get<StumpModel>(model);
        header["kind"] = "stump";
        header["threshold"] = stump.threshold;
        header["polarity"] = stump.polarity;
    }
    std::string out = header.dump();
    out.push_back('\n');
    out += blob;
    write_file_atomic(path, out);
}

DetectorModel load_detector(const std::string& path) {
    const std::string bytes = read_file(path);
    const size_t nl = bytes.find('\n');
    if (nl == std::string::npos) throw std::runtime_error(path + ": missing detector header line");
    json header = json::parse(bytes.substr(0, nl));
    if (header.at("format_version").get<int>() != 1)
        throw std::runtime_error(path + ": unsupported detector format version");
    const std::string kind = header.at("kind").get<std::string>();
    if (kind == "stump") {
        StumpModel stump;
        stump.threshold = header.at("threshold").get<double>();
        stump.polarity = header.at("polarity").get<int>();
        if (stump.polarity != 1 && stump.polarity != -1)
            throw std::runtime_error(path + ": stump polarity must be +1 or -1");
        return stump;
    }
    if (kind != "svm-rbf") throw std::runtime_error(path + ": unknown detector kind '" + kind + "'");

    SvmModel svm;
    svm.C = header.at("C").get<double>();
    svm.gamma = header.at("gamma").get<double>();
    svm.bias = header.at("bias").get<double>();
    svm.feature_mean = header.at("feature_mean").get<std::vector<float>>();
    svm.feature_std = header.at("feature_std").get<std::vector<float>>();
    const size_t dim = svm.feature_mean.size();
    const size_t nsv = header.at("num_support_vectors").get<size_t>();
    if (bytes.size() - nl - 1 != (nsv * dim + nsv) * 4)
        throw std::runtime_error(path + ": support-vector block size mismatch");
    size_t off = nl + 1;
    svm.support_vectors.assign(nsv, std::vector<float>(dim));
    for (auto& sv : svm.support_vectors)
        for (float& v : sv) {
            v = read_f32_le(bytes, off);
            off += 4;
        }
    svm.dual_coefs.resize(nsv);
    for (double& c : svm.dual_coefs) {
        c = read_f32_le(bytes, off);
        off += 4;
    }
    return svm;
}

}  // namespace advdet
