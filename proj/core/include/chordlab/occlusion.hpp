#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chordlab/model.hpp"
#include "chordlab/window.hpp"

namespace chordlab {

// Occlusion sensitivity: mean |p_original - p_masked| of the true chord,
// taken over samples the unmasked model predicted correctly. Offsets run
// -L..-1 relative to the target.
struct InfluenceProfile {
    int context_len = 0;
    std::vector<double> influence;  // index i corresponds to offset i - context_len
    std::int64_t n = 0;             // correctly-predicted sample count

    double at_offset(int offset) const {  // offset in [-L, -1]
        return influence[static_cast<std::size_t>(offset + context_len)];
    }
};

// Per-(feature, position) influence grid for multi-feature models.
struct AttributionGrid {
    std::vector<std::string> features;
    int context_len = 0;
    std::vector<double> values;  // [F, L] row-major, positions ascending -L..-1
    std::int64_t n = 0;

    double at(int feature, int offset) const {
        return values[static_cast<std::size_t>(feature) * context_len +
                      static_cast<std::size_t>(offset + context_len)];
    }
};

// Masks one position at a time (every lane, for multi-feature inputs) with
// the reserved MASK token. Throws NoCorrectPredictions when the conditioning
// set is empty.
InfluenceProfile position_influence(const PredictorModel& model, const WindowSlice& data,
                                    int batch_size = 256);

// Masks one (feature, position) cell at a time. Throws NotMultiFeature for
// single-feature models.
AttributionGrid feature_attribution(const PredictorModel& model, const WindowSlice& data,
                                    int batch_size = 256);

enum class ExportFormat { csv, json };

// CSV columns: position,influence (profile) or feature,position,influence
// (grid), positions ascending, features in model order. An empty grid writes
// the header only and warns on stderr.
void export_profile(const InfluenceProfile& profile, const std::string& path, ExportFormat fmt);
void export_grid(const AttributionGrid& grid, const std::string& path, ExportFormat fmt);

// gnuplot-friendly: one `<stem>_<feature>.csv` series file per feature.
void export_grid_series(const AttributionGrid& grid, const std::string& dir,
                        const std::string& stem);

InfluenceProfile load_profile_json(const std::string& path);
AttributionGrid load_grid_json(const std::string& path);

}  // namespace chordlab
