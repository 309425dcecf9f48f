#ifndef VESSELGAN_EVAL_STITCH_HPP
#define VESSELGAN_EVAL_STITCH_HPP

#include <vector>

#include "vesselgan/dataset/types.hpp"
#include "vesselgan/eval/auc.hpp"
#include "vesselgan/nets/network.hpp"

namespace vesselgan {

// Per-pixel vessel probabilities with the number of patch predictions that
// were averaged into each pixel.
struct ScoreMap {
    Tensor<float> prob;        // [H, W]
    Tensor<int32_t> coverage;  // [H, W]
};

// Patches are stored in [0,1]; the networks train on the generator's tanh
// range.
inline float to_net_range(float v) { return v * 2.0f - 1.0f; }

// Window start offsets covering [0, extent): stride steps plus a final
// flush-to-edge window so border pixels keep coverage >= 1.
inline std::vector<int64_t> stitch_offsets(int64_t extent, int64_t size, int64_t stride) {
    std::vector<int64_t> out;
    for (int64_t p = 0; p + size <= extent; p += stride) out.push_back(p);
    if (out.empty() || out.back() + size < extent) out.push_back(extent - size);
    return out;
}

// Overlapping structured predictions averaged per pixel (dropout disabled).
template <typename T>
ScoreMap predict_image_sp(Network<T>& net, const GrayImage& img, int64_t stride,
                          int64_t batch_size = 64) {
    const int64_t size = net.spec().input_resolution;
    if (stride < 1 || stride > size) throw config_error("predict_image: stride must be in [1, patch]");
    if (net.spec().head != HeadKind::structured)
        throw config_error("predict_image_sp: network head is not structured");
    const int64_t h = img.height(), w = img.width();
    const auto rows = stitch_offsets(h, size, stride);
    const auto cols = stitch_offsets(w, size, stride);

    ScoreMap map;
    map.prob = Tensor<float>({h, w});
    map.coverage = Tensor<int32_t>({h, w});
    std::vector<std::pair<int64_t, int64_t>> windows;
    for (int64_t r : rows)
        for (int64_t c : cols) windows.emplace_back(r, c);

    for (size_t start = 0; start < windows.size(); start += static_cast<size_t>(batch_size)) {
        const size_t count = std::min<size_t>(static_cast<size_t>(batch_size),
                                              windows.size() - start);
        Tensor<T> batch({static_cast<int64_t>(count), size, size, 1});
        for (size_t b = 0; b < count; ++b) {
            const auto [r0, c0] = windows[start + b];
            for (int64_t r = 0; r < size; ++r)
                for (int64_t c = 0; c < size; ++c)
                    batch[((static_cast<int64_t>(b) * size + r) * size + c)] =
                        static_cast<T>(to_net_range(img.values[(r0 + r) * w + (c0 + c)]));
        }
        const auto res = net.forward(batch, {}, false, nullptr);
        for (size_t b = 0; b < count; ++b) {
            const auto [r0, c0] = windows[start + b];
            for (int64_t r = 0; r < size; ++r)
                for (int64_t c = 0; c < size; ++c) {
                    const int64_t at = ((static_cast<int64_t>(b) * size + r) * size + c) * 2 + 1;
                    map.prob[(r0 + r) * w + (c0 + c)] += static_cast<float>(res.probs[at]);
                    ++map.coverage[(r0 + r) * w + (c0 + c)];
                }
        }
    }
    for (int64_t i = 0; i < map.prob.size(); ++i)
        if (map.coverage[i] > 0) map.prob[i] /= static_cast<float>(map.coverage[i]);
    return map;
}

// Center-pixel scores at arbitrary pixel positions (each scored by one
// window centered there). Positions too close to the border are skipped.
template <typename T>
std::vector<std::pair<int64_t, double>> cp_scores_at(
    Network<T>& net, const GrayImage& img, const std::vector<int64_t>& pixel_indices,
    int64_t batch_size = 128) {
    const int64_t size = net.spec().input_resolution;
    const int64_t h = img.height(), w = img.width();
    std::vector<int64_t> valid;
    for (int64_t px : pixel_indices) {
        const int64_t r = px / w, c = px % w;
        const int64_t r0 = r - size / 2, c0 = c - size / 2;
        if (r0 >= 0 && c0 >= 0 && r0 + size <= h && c0 + size <= w) valid.push_back(px);
    }
    std::vector<std::pair<int64_t, double>> out;
    for (size_t start = 0; start < valid.size(); start += static_cast<size_t>(batch_size)) {
        const size_t count =
            std::min<size_t>(static_cast<size_t>(batch_size), valid.size() - start);
        Tensor<T> batch({static_cast<int64_t>(count), size, size, 1});
        for (size_t b = 0; b < count; ++b) {
            const int64_t px = valid[start + b];
            const int64_t r0 = px / w - size / 2, c0 = px % w - size / 2;
            for (int64_t r = 0; r < size; ++r)
                for (int64_t c = 0; c < size; ++c)
                    batch[(static_cast<int64_t>(b) * size + r) * size + c] =
                        static_cast<T>(to_net_range(img.values[(r0 + r) * w + (c0 + c)]));
        }
        const auto res = net.forward(batch, {}, false, nullptr);
        for (size_t b = 0; b < count; ++b)
            out.emplace_back(valid[start + b],
                             static_cast<double>(res.probs[static_cast<int64_t>(b) * 2 + 1]));
    }
    return out;
}

// Full sliding-window center-pixel prediction. Pixels whose window leaves
// the image keep coverage 0.
template <typename T>
ScoreMap predict_image_cp(Network<T>& net, const GrayImage& img, int64_t batch_size = 256) {
    const int64_t size = net.spec().input_resolution;
    const int64_t h = img.height(), w = img.width();
    std::vector<int64_t> all;
    for (int64_t r = size / 2; r + (size - size / 2) <= h; ++r)
        for (int64_t c = size / 2; c + (size - size / 2) <= w; ++c) all.push_back(r * w + c);
    const auto scored = cp_scores_at(net, img, all, batch_size);
    ScoreMap map;
    map.prob = Tensor<float>({h, w});
    map.coverage = Tensor<int32_t>({h, w});
    for (const auto& [px, score] : scored) {
        map.prob[px] = static_cast<float>(score);
        map.coverage[px] = 1;
    }
    return map;
}

template <typename T>
ScoreMap predict_image(Network<T>& net, const GrayImage& img, HeadKind head, int64_t stride) {
    if (net.parameter_count() == 0) throw config_error("predict_image: uninitialized network");
    return head == HeadKind::structured ? predict_image_sp(net, img, stride)
                                        : predict_image_cp(net, img);
}

// Pooled pixel AUC over FOV pixels with coverage >= 1.
inline double scoremap_auc(const ScoreMap& map, const Tensor<uint8_t>& gt,
                           const Tensor<uint8_t>* fov) {
    std::vector<double> scores;
    std::vector<uint8_t> labels;
    for (int64_t i = 0; i < map.prob.size(); ++i) {
        if (map.coverage[i] < 1) continue;
        if (fov && !(*fov)[i]) continue;
        scores.push_back(map.prob[i]);
        labels.push_back(gt[i] ? 1 : 0);
    }
    return auc_roc(scores, labels);
}

}  // namespace vesselgan

#endif
