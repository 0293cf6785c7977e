#pragma once

// Plain domain records shared across stages.

#include "fluidlab/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fluidlab {

struct Track {
    std::string speaker_id;
    std::vector<double> samples;
};

/// All tracks share `sample_rate` and have equal length.
struct SessionAudio {
    std::string session_id;
    int sample_rate = 0;
    std::vector<Track> tracks;

    std::size_t length() const { return tracks.empty() ? 0 : tracks.front().samples.size(); }
    double duration() const { return sample_rate > 0 ? static_cast<double>(length()) / sample_rate : 0.0; }
};

enum class ClipKind { targeted_gap, targeted_overlap, non_targeted };

inline std::string to_string(ClipKind k)
{
    switch (k) {
    case ClipKind::targeted_gap:
        return "targeted_gap";
    case ClipKind::targeted_overlap:
        return "targeted_overlap";
    case ClipKind::non_targeted:
        return "non_targeted";
    }
    return "?";
}

inline ClipKind parse_clip_kind(const std::string& s)
{
    if (s == "targeted_gap")
        return ClipKind::targeted_gap;
    if (s == "targeted_overlap")
        return ClipKind::targeted_overlap;
    if (s == "non_targeted")
        return ClipKind::non_targeted;
    throw ValidationError("unknown clip kind '" + s + "' (expected targeted_gap, targeted_overlap, non_targeted)");
}

inline bool is_targeted(ClipKind k) { return k != ClipKind::non_targeted; }

struct ClipManifest {
    std::string clip_id;
    std::string session_id;
    double mark_time = 0.0;
    double start = 0.0;
    double end = 0.0;
    ClipKind kind = ClipKind::targeted_gap;

    bool operator==(const ClipManifest&) const = default;
};

enum class Modality { audio, face, text };

inline std::string to_string(Modality m)
{
    switch (m) {
    case Modality::audio:
        return "audio";
    case Modality::face:
        return "face";
    case Modality::text:
        return "text";
    }
    return "?";
}

inline Modality parse_modality(const std::string& s)
{
    if (s == "audio")
        return Modality::audio;
    if (s == "face")
        return Modality::face;
    if (s == "text")
        return Modality::text;
    throw ValidationError("unknown modality '" + s + "' (expected audio, face, text)");
}

struct EmbeddingRecord {
    std::string clip_id;
    Modality modality = Modality::audio;
    std::vector<double> vector;

    std::size_t dims() const { return vector.size(); }
};

struct Rating {
    std::string clip_id;
    std::string annotator_id;
    int fluidity = 0;
    int enjoyment = 0;
};

struct AnnotationSet {
    std::vector<Rating> ratings;
    std::vector<std::string> reliability_clips;
};

/// Label 1 is the negative-experience (low rating) class.
struct LabeledClip {
    std::string clip_id;
    double mean_fluidity = 0.0;
    double mean_enjoyment = 0.0;
    int n_annotators = 0;
    int label_fluidity = 0;
    int label_enjoyment = 0;
};

enum class Target { fluidity, enjoyment };

inline std::string to_string(Target t) { return t == Target::fluidity ? "fluidity" : "enjoyment"; }

inline Target parse_target(const std::string& s)
{
    if (s == "fluidity")
        return Target::fluidity;
    if (s == "enjoyment")
        return Target::enjoyment;
    throw ValidationError("unknown target '" + s + "' (expected fluidity, enjoyment)");
}

inline int label_of(const LabeledClip& c, Target t) { return t == Target::fluidity ? c.label_fluidity : c.label_enjoyment; }

/// Per-clip fused feature matrix. Column names carry the modality block:
/// `audio_*`, `face_*`, `text_*`, and presence flags `has_audio` etc.
struct FeatureTable {
    std::vector<std::string> clip_ids;
    std::vector<std::string> session_ids;
    std::vector<ClipKind> kinds;
    std::vector<std::string> columns;
    Matrix values;

    std::size_t rows() const { return clip_ids.size(); }

    /// Column indices belonging to a modality block, including its presence flag.
    std::vector<std::size_t> block_columns(Modality m) const
    {
        const std::string prefix = to_string(m) + "_";
        const std::string flag = "has_" + to_string(m);
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j].rfind(prefix, 0) == 0 || columns[j] == flag)
                out.push_back(j);
        return out;
    }
};

/// One long-format line of results.csv.
struct ResultRow {
    std::size_t combo_id = 0;
    std::string test_folds;    // e.g. "0-1"
    std::string labeled_folds; // e.g. "2-5-7"
    double labeled_fraction = 0.0;
    std::string algorithm;
    std::string target;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
};

} // namespace fluidlab
