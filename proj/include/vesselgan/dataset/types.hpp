#ifndef VESSELGAN_DATASET_TYPES_HPP
#define VESSELGAN_DATASET_TYPES_HPP

#include <string>
#include <vector>

#include "vesselgan/imaging/image.hpp"

namespace vesselgan {

enum class DatasetName { drive, stare };

inline const char* to_string(DatasetName n) { return n == DatasetName::drive ? "drive" : "stare"; }
inline DatasetName dataset_from_string(const std::string& s) {
    if (s == "drive" || s == "DRIVE") return DatasetName::drive;
    if (s == "stare" || s == "STARE") return DatasetName::stare;
    throw config_error("unknown dataset: " + s);
}

struct DatasetSpec {
    DatasetName name = DatasetName::drive;
    std::string root_path;
    uint64_t fold_seed = 0;  // STARE hold-out permutation
};

// Annotation budget: B labeled patches drawn from M distinct training images.
struct BudgetPlan {
    int64_t budget = 0;
    int64_t pool = 1;
    uint64_t seed = 0;
};

// A preprocessed image ready for patch extraction and evaluation.
struct PreparedImage {
    GrayImage gray;
    Tensor<uint8_t> gt;   // empty when unavailable
    Tensor<uint8_t> fov;  // always present
    std::string id;
    SplitTag split = SplitTag::train;
};

struct SplitPatchSet {
    std::vector<Patch> labeled;
    std::vector<Patch> unlabeled;
    BudgetPlan plan;
    std::vector<std::string> image_ids;  // id table for serialization
};

struct FoldDescriptor {
    int64_t fold_index = 0;
    int64_t test_image = 0;               // index into the image list
    std::vector<int64_t> train_images;    // the remaining 19
};

}  // namespace vesselgan

#endif
