#pragma once

// Photometric-error reporting and the latency benchmark. The error metric is
// the mean per-pixel Euclidean distance in RGB space (0-255); its standard
// deviation over frames is the temporal-stability proxy.

#include <cstdint>
#include <string>
#include <vector>

#include "ego2front/image.hpp"
#include "ego2front/trainer.hpp"

namespace ego2front::evalh {

// mean over pixels of sqrt(dR^2 + dG^2 + dB^2); range [0, 255*sqrt(3)]
double photometric_error(const Image& pred, const Image& gt);

struct PhotometricReport {
    std::vector<double> per_frame_error;
    double mean = 0;
    double stddev = 0;               // population std over frames
    std::vector<double> heatmap;     // per-pixel mean error, h*w
    int heatmap_w = 0, heatmap_h = 0;
    std::string meta;
};

PhotometricReport sequence_report(const std::vector<Image>& pred,
                                  const std::vector<Image>& gt);

// CSV "frame,error", key=value summary and the heat-map PNG (linear grayscale,
// 0 error -> 0, 255*sqrt(3) -> 255)
void write_report(const std::string& out_dir, const PhotometricReport& report);

Image heatmap_to_image(const PhotometricReport& report);

struct LatencyRow {
    int resolution = 0;
    double mean_ms = 0;
    double median_ms = 0;
    double stddev_ms = 0;
    bool realtime = false;  // mean within the 40 ms budget
};

struct LatencyTable {
    std::vector<LatencyRow> rows;
    int64_t frames = 0;
    int64_t repeats = 0;
    int64_t sequences = 0;
    std::string notes;
};

// Per-frame wall time of the full synthesis path, image reads and writes
// included. Synthetic input sequences are generated under work_dir; each of
// `sequences` sequences is processed `repeats` times per resolution.
LatencyTable benchmark_latency(const train::TrainConfig& model_cfg,
                               const std::vector<int>& resolutions, int64_t frames,
                               int64_t repeats, int64_t sequences,
                               const std::string& work_dir);

void write_latency_table(const std::string& path, const LatencyTable& table);
std::string format_latency_table(const LatencyTable& table);

}  // namespace ego2front::evalh
