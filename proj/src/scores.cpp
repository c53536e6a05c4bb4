#include "advdet/scores.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "advdet/fsutil.hpp"

namespace advdet {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Original: return "original";
        case Provenance::Fgsm: return "fgsm";
        case Provenance::Bim: return "bim";
        case Provenance::Cw: return "cw";
        case Provenance::Boundary: return "boundary";
    }
    return "?";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "original") return Provenance::Original;
    if (name == "fgsm") return Provenance::Fgsm;
    if (name == "bim") return Provenance::Bim;
    if (name == "cw") return Provenance::Cw;
    if (name == "boundary") return Provenance::Boundary;
    throw std::invalid_argument("unknown provenance '" + name + "'");
}

void validate_record(const ScoreRecord& r) {
    if (r.label != +1 && r.label != -1)
        throw std::invalid_argument("score record: label must be +1 or -1, got " +
                                    std::to_string(r.label));
    if ((r.provenance == Provenance::Original) != (r.label == +1))
        throw std::invalid_argument("score record: clean records must be labeled +1 and attacked "
                                    "records -1");
    if (r.scores.empty()) throw std::invalid_argument("score record: empty score vector");
}

std::string scores_to_csv(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw std::invalid_argument("scores_to_csv: no records");
    const size_t k = records.front().scores.size();
    std::string out;
    for (size_t j = 0; j < k; ++j) {
        out += "score_" + std::to_string(j);
        out.push_back(',');
    }
    out += "label,provenance\n";
    char buf[48];
    for (const ScoreRecord& r : records) {
        validate_record(r);
        if (r.scores.size() != k)
            throw std::invalid_argument("scores_to_csv: inconsistent score dimensions");
        for (float v : r.scores) {
            // %.9g round-trips float32 exactly
            std::snprintf(buf, sizeof(buf), "%.9g,", static_cast<double>(v));
            out += buf;
        }
        out += r.label > 0 ? "1," : "-1,";
        out += provenance_name(r.provenance);
        out.push_back('\n');
    }
    return out;
}

std::vector<ScoreRecord> scores_from_csv(const std::string& csv) {
    std::vector<ScoreRecord> records;
    size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= csv.size()) return false;
        size_t end = csv.find('\n', pos);
        if (end == std::string::npos) end = csv.size();
        line = csv.substr(pos, end - pos);
        pos = end + 1;
        return true;
    };
    std::string header;
    if (!next_line(header) || header.rfind("score_0,", 0) != 0)
        throw std::runtime_error("scores CSV: missing or malformed header");
    size_t k = 0;
    for (size_t p = 0; (p = header.find("score_", p)) != std::string::npos; p += 6) ++k;

    std::string line;
    while (next_line(line)) {
        if (line.empty()) continue;
        ScoreRecord r;
        r.scores.reserve(k);
        size_t field_start = 0;
        std::vector<std::string> fields;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(field_start, i - field_start));
                field_start = i + 1;
            }
        }
        if (fields.size() != k + 2)
            throw std::runtime_error("scores CSV: expected " + std::to_string(k + 2) +
                                     " fields, got " + std::to_string(fields.size()));
        for (size_t j = 0; j < k; ++j) r.scores.push_back(std::strtof(fields[j].c_str(), nullptr));
        r.label = std::atoi(fields[k].c_str());
        r.provenance = provenance_from_name(fields[k + 1]);
        validate_record(r);
        records.push_back(std::move(r));
    }
    return records;
}

void save_scores_csv(const std::string& path, const std::vector<ScoreRecord>& records) {
    write_file_atomic(path, scores_to_csv(records));
}

std::vector<ScoreRecord> load_scores_csv(const std::string& path) {
    return scores_from_csv(read_file(path));
}

}  // namespace advdet
