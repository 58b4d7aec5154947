#pragma once

// Transient-event temporal synchronization: both recordings observe a single
// bright frame; the frame-index difference of the detections is the offset.

#include <cstdint>
#include <vector>

#include "ego2front/image.hpp"

namespace ego2front::sync {

struct SyncOffset {
    int64_t offset_frames = 0;
    double confidence = 0;  // in [0,1]
};

// First index whose mean luminance exceeds threshold*255 and also exceeds
// 3x the running median of the preceding frame means. Throws NoTransientFound.
int64_t detect_transient_means(const std::vector<double>& frame_means, double threshold);

int64_t detect_transient(const std::vector<Image>& luminance_frames, double threshold);

// offset = transient_index(a) - transient_index(b)
SyncOffset align_means(const std::vector<double>& means_a, const std::vector<double>& means_b,
                       double threshold);

SyncOffset align(const std::vector<Image>& seq_a, const std::vector<Image>& seq_b,
                 double threshold = 0.8);

// overlap of two sequences after shifting b by `offset` (a[i] pairs b[i - offset]);
// returns {start_a, start_b, common_length}
struct AlignedRange {
    int64_t start_a = 0, start_b = 0, length = 0;
};
AlignedRange aligned_range(int64_t len_a, int64_t len_b, int64_t offset);

}  // namespace ego2front::sync
