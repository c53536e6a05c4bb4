#pragma once

#include <string>
#include <vector>

namespace advdet {

enum class Provenance { Original, Fgsm, Bim, Cw, Boundary };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

// One detector sample: the K class scores of an image, labeled +1 when the
// image came from the clean pool and -1 when it came from an attack.
struct ScoreRecord {
    std::vector<float> scores;
    int label = +1;  // +1 clean, -1 adversarial
    Provenance provenance = Provenance::Original;
};

// Throws unless label is +1/-1 and (provenance == Original) == (label == +1).
void validate_record(const ScoreRecord& r);

// CSV with columns score_0..score_{K-1},label,provenance. Floats are
// emitted with enough digits to round-trip exactly.
std::string scores_to_csv(const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> scores_from_csv(const std::string& csv);

void save_scores_csv(const std::string& path, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> load_scores_csv(const std::string& path);

}  // namespace advdet
