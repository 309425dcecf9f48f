#ifndef VESSELGAN_IMAGING_IMAGE_HPP
#define VESSELGAN_IMAGING_IMAGE_HPP

#include <string>

#include "vesselgan/core/tensor.hpp"

namespace vesselgan {

enum class SplitTag { train, test };

// Raw fundus photograph with its circular field-of-view mask and, when the
// dataset provides one, the per-pixel vessel ground truth.
struct FundusImage {
    Tensor<uint8_t> pixels;     // [H, W, 3], 0..255
    Tensor<uint8_t> fov_mask;   // [H, W], nonzero = inside field of view
    Tensor<uint8_t> vessel_gt;  // [H, W], nonzero = vessel; empty when absent
    std::string image_id;
    SplitTag split_tag = SplitTag::train;

    int64_t height() const { return pixels.dim(0); }
    int64_t width() const { return pixels.dim(1); }

    void check() const {
        if (pixels.rank() != 3) throw data_error(image_id + ": pixels must be H x W x C");
        if (fov_mask.rank() != 2 || fov_mask.dim(0) != height() || fov_mask.dim(1) != width())
            throw data_error(image_id + ": fov mask dims differ from pixels");
        if (!vessel_gt.empty()) {
            if (vessel_gt.dim(0) != height() || vessel_gt.dim(1) != width())
                throw data_error(image_id + ": ground truth dims differ from pixels");
            for (int64_t i = 0; i < vessel_gt.size(); ++i)
                if (vessel_gt[i] && !fov_mask[i])
                    throw data_error(image_id + ": vessel label outside field of view");
        }
    }
};

enum class ValueRange { unit, symmetric };  // [0,1] or [-1,1]

struct GrayImage {
    Tensor<float> values;  // [H, W]
    ValueRange range = ValueRange::unit;

    int64_t height() const { return values.dim(0); }
    int64_t width() const { return values.dim(1); }

    bool in_range() const {
        const float lo = range == ValueRange::unit ? 0.0f : -1.0f;
        for (int64_t i = 0; i < values.size(); ++i)
            if (values[i] < lo || values[i] > 1.0f) return false;
        return true;
    }
};

struct Patch {
    Tensor<float> values;   // [S, S]
    Tensor<uint8_t> label;  // [S, S]; empty when unlabeled
    int64_t center_row = 0;
    int64_t center_col = 0;
    std::string source_id;

    bool labeled() const { return !label.empty(); }
};

}  // namespace vesselgan

#endif
