#ifndef VESSELGAN_EVAL_AUC_HPP
#define VESSELGAN_EVAL_AUC_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "vesselgan/core/common.hpp"

namespace vesselgan {

struct metric_error : error {
    using error::error;
};

// Area under the ROC curve via the rank statistic (Mann-Whitney), ties by
// midrank. Equivalent to P(score_pos > score_neg) + P(tie)/2.
inline double auc_roc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) throw config_error("auc_roc: size mismatch");
    const size_t n = scores.size();
    int64_t n_pos = 0;
    for (uint8_t l : labels) n_pos += l ? 1 : 0;
    const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw metric_error("auc_roc: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]]) pos_rank_sum += midrank;
        i = j + 1;
    }
    return (pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace vesselgan

#endif
