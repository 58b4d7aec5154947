#include "ego2front/sync.hpp"

#include <algorithm>
#include <queue>

#include "ego2front/common.hpp"

namespace ego2front::sync {

namespace {

// incremental median over the prefix of values seen so far
class RunningMedian {
  public:
    void push(double v) {
        if (lo_.empty() || v <= lo_.top()) {
            lo_.push(v);
        } else {
            hi_.push(v);
        }
        if (lo_.size() > hi_.size() + 1) {
            hi_.push(lo_.top());
            lo_.pop();
        } else if (hi_.size() > lo_.size()) {
            lo_.push(hi_.top());
            hi_.pop();
        }
    }

    bool empty() const { return lo_.empty(); }

    double median() const {
        if (lo_.size() == hi_.size()) return (lo_.top() + hi_.top()) / 2.0;
        return lo_.top();
    }

  private:
    std::priority_queue<double> lo_;  // max-heap of lower half
    std::priority_queue<double, std::vector<double>, std::greater<double>> hi_;
};

}  // namespace

int64_t detect_transient_means(const std::vector<double>& frame_means, double threshold) {
    require(!frame_means.empty(), ErrorCode::LengthTooShort, "detect_transient: empty sequence");
    require(threshold > 0.0 && threshold < 1.0, ErrorCode::UsageError,
            "detect_transient: threshold must be in (0,1)");
    const double bar = threshold * 255.0;
    RunningMedian med;
    for (size_t i = 0; i < frame_means.size(); ++i) {
        double v = frame_means[i];
        bool bright = v > bar;
        // the median guard suppresses bright-scene false positives; the first
        // frame has no history and passes on brightness alone
        bool above_median = med.empty() || v > 3.0 * med.median();
        if (bright && above_median) return static_cast<int64_t>(i);
        med.push(v);
    }
    raise(ErrorCode::NoTransientFound, "detect_transient: no frame qualifies");
}

int64_t detect_transient(const std::vector<Image>& luminance_frames, double threshold) {
    std::vector<double> means;
    means.reserve(luminance_frames.size());
    for (const Image& f : luminance_frames)
        means.push_back(f.channels == 1 ? f.mean() : rgb_to_luminance(f).mean());
    return detect_transient_means(means, threshold);
}

namespace {

double detection_confidence(const std::vector<double>& means, int64_t idx, double threshold) {
    double v = means[static_cast<size_t>(idx)] / 255.0;
    double c = (v - threshold) / (1.0 - threshold);
    return std::clamp(c, 0.0, 1.0);
}

}  // namespace

SyncOffset align_means(const std::vector<double>& means_a, const std::vector<double>& means_b,
                       double threshold) {
    int64_t ta = detect_transient_means(means_a, threshold);
    int64_t tb = detect_transient_means(means_b, threshold);
    SyncOffset off;
    off.offset_frames = ta - tb;
    off.confidence = std::min(detection_confidence(means_a, ta, threshold),
                              detection_confidence(means_b, tb, threshold));
    return off;
}

SyncOffset align(const std::vector<Image>& seq_a, const std::vector<Image>& seq_b,
                 double threshold) {
    std::vector<double> ma, mb;
    ma.reserve(seq_a.size());
    mb.reserve(seq_b.size());
    for (const Image& f : seq_a) ma.push_back(f.channels == 1 ? f.mean() : rgb_to_luminance(f).mean());
    for (const Image& f : seq_b) mb.push_back(f.channels == 1 ? f.mean() : rgb_to_luminance(f).mean());
    return align_means(ma, mb, threshold);
}

AlignedRange aligned_range(int64_t len_a, int64_t len_b, int64_t offset) {
    // a[i] pairs with b[i - offset]
    int64_t start_a = std::max<int64_t>(0, offset);
    int64_t start_b = std::max<int64_t>(0, -offset);
    int64_t length = std::min(len_a - start_a, len_b - start_b);
    if (length < 0) length = 0;
    return {start_a, start_b, length};
}

}  // namespace ego2front::sync
