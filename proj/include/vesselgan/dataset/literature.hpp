#ifndef VESSELGAN_DATASET_LITERATURE_HPP
#define VESSELGAN_DATASET_LITERATURE_HPP

#include <array>
#include <string>
#include <vector>

#include "vesselgan/dataset/types.hpp"

namespace vesselgan {

// Reference AUC constants cited for table rendering; these rows are never
// recomputed here.
struct ReferenceRow {
    std::string method;
    std::string genre;  // "supervised" / "semi-supervised"
    std::array<double, 4> auc;  // budgets 0.5K, 1K, 3K, 10K
};

inline constexpr std::array<int64_t, 4> kComparisonBudgets = {500, 1000, 3000, 10000};

inline std::vector<ReferenceRow> literature_rows(DatasetName dataset) {
    switch (dataset) {
        case DatasetName::drive:
            return {
                {"Dasgupta et al.", "supervised", {0.85, 0.87, 0.89, 0.92}},
                {"Liskowski et al.", "supervised", {0.83, 0.84, 0.87, 0.92}},
                {"U-Net", "supervised", {0.89, 0.90, 0.92, 0.95}},
                {"Lahiri et al.", "semi-supervised", {0.82, 0.84, 0.85, 0.93}},
            };
        case DatasetName::stare:
            return {
                {"Dasgupta et al.", "supervised", {0.82, 0.84, 0.87, 0.91}},
                {"Liskowski et al.", "supervised", {0.84, 0.86, 0.89, 0.93}},
                {"U-Net", "supervised", {0.86, 0.89, 0.90, 0.94}},
                {"Lahiri et al.", "semi-supervised", {0.80, 0.81, 0.83, 0.90}},
            };
    }
    throw config_error("unknown dataset for literature rows");
}

// Reported rows of the proposed structured-prediction model, kept for table
// goldens and trend context.
inline ReferenceRow proposed_sp_reference(DatasetName dataset) {
    if (dataset == DatasetName::drive)
        return {"Proposed (SP)", "semi-supervised", {0.92, 0.94, 0.96, 0.97}};
    return {"Proposed (SP)", "semi-supervised", {0.90, 0.92, 0.94, 0.96}};
}

// Center-pixel ablation on DRIVE (budgets 0.5K, 1K, 2K, 3K): the prior
// center-pixel framework against the same model with the unsupervised loss.
inline constexpr std::array<int64_t, 4> kCpBudgets = {500, 1000, 2000, 3000};
inline std::vector<ReferenceRow> cp_reference_rows() {
    return {
        {"Lahiri et al.", "semi-supervised", {0.82, 0.84, 0.85, 0.81}},
        {"Proposed (CP)", "semi-supervised", {0.86, 0.88, 0.89, 0.90}},
    };
}

// Full-supervision anchors at 60K labeled patches.
inline double unet_full_supervision_auc(DatasetName dataset) {
    return dataset == DatasetName::drive ? 0.97 : 0.96;
}

}  // namespace vesselgan

#endif
