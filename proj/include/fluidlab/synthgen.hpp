#pragma once

// Ground-truth synthetic data: Gaussian-cluster feature tables with session
// effects and controllable view redundancy, plus scripted multi-speaker audio.

#include "fluidlab/core.hpp"
#include "fluidlab/records.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace fluidlab {

struct SynthConfig {
    int n_sessions = 30;
    int clips_per_session = 100;
    int non_targeted_per_session = 45;
    double positive_rate = 0.08;
    std::size_t audio_dim = 128;
    std::size_t face_dim = 34;
    std::size_t text_dim = 384;
    /// Distance between class means along the signal direction.
    double cluster_separation = 3.0;
    /// 1: each view (audio | face+text) carries the full class signal;
    /// 0: the signal is only recoverable by combining the views.
    double view_redundancy = 0.5;
    /// Std of the shared nuisance factor that masks the signal when
    /// redundancy < 1.
    double nuisance_scale = 2.0;
    /// Std of per-session random offsets.
    double session_effect = 0.3;
    std::uint64_t seed = 0;

    void validate() const
    {
        require(n_sessions >= 1 && clips_per_session >= 1 && non_targeted_per_session >= 0, "synth: bad counts");
        require(positive_rate > 0.0 && positive_rate < 1.0, "synth: positive_rate must be in (0, 1)");
        require(audio_dim > 0 && face_dim > 0 && text_dim > 0, "synth: dims must be positive");
        require(cluster_separation >= 0.0, "synth: cluster_separation must be >= 0");
        require(view_redundancy >= 0.0 && view_redundancy <= 1.0, "synth: view_redundancy must be in [0, 1]");
    }
};

/// Named presets. `ssl-advantage` is the regime used to check that the SSL
/// wrappers beat SL at one labeled fold; `paper-scale` mirrors the corpus
/// sizes and embedding widths.
inline SynthConfig synth_preset(const std::string& name)
{
    SynthConfig c;
    if (name == "paper-scale")
        return c;
    if (name == "ssl-advantage") {
        c.n_sessions = 30;
        c.clips_per_session = 40;
        c.non_targeted_per_session = 40;
        c.audio_dim = 24;
        c.face_dim = 8;
        c.text_dim = 32;
        c.cluster_separation = 2.0;
        c.view_redundancy = 0.5;
        c.nuisance_scale = 0.0;
        c.session_effect = 0.3;
        return c;
    }
    if (name == "small") {
        c.n_sessions = 12;
        c.clips_per_session = 25;
        c.non_targeted_per_session = 10;
        c.audio_dim = 6;
        c.face_dim = 4;
        c.text_dim = 6;
        c.positive_rate = 0.2;
        c.cluster_separation = 3.0;
        return c;
    }
    throw ValidationError("unknown synth preset '" + name + "' (expected paper-scale, ssl-advantage, small)");
}

struct SynthDataset {
    FeatureTable table;
    std::vector<LabeledClip> labels;    // targeted clips only
    std::vector<int> truth;             // fluidity class of every row of `table`
    std::vector<ClipManifest> manifest; // one entry per row of `table`
};

namespace detail {

inline Vector random_unit(Rng& rng, Eigen::Index d)
{
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i)
        v(i) = normal01(rng);
    return v / v.norm();
}

} // namespace detail

/// Clip features: view A (audio) = eps + u_a (c + (1 - r) e), view B
/// (face | text) = eps + u_b (r c + (1 - r) e), with class offset
/// c = +-separation / 2, nuisance e ~ N(0, nuisance^2), unit noise eps and a
/// per-session offset added to every column.
inline SynthDataset generate(const SynthConfig& cfg)
{
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0x73796e));
    const auto da = static_cast<Eigen::Index>(cfg.audio_dim);
    const auto db = static_cast<Eigen::Index>(cfg.face_dim + cfg.text_dim);
    const Eigen::Index d = da + db;
    const Vector ua = detail::random_unit(rng, da);
    const Vector ub = detail::random_unit(rng, db);
    const double r = cfg.view_redundancy;

    SynthDataset ds;
    auto& t = ds.table;
    for (std::size_t i = 0; i < cfg.audio_dim; ++i)
        t.columns.push_back("audio_" + std::to_string(i));
    for (std::size_t i = 0; i < cfg.face_dim; ++i)
        t.columns.push_back("face_" + std::to_string(i));
    for (std::size_t i = 0; i < cfg.text_dim; ++i)
        t.columns.push_back("text_" + std::to_string(i));
    t.columns.insert(t.columns.end(), {"has_audio", "has_face", "has_text"});

    const int per_session = cfg.clips_per_session + cfg.non_targeted_per_session;
    const auto n = static_cast<Eigen::Index>(cfg.n_sessions) * per_session;
    t.values = Matrix::Zero(n, d + 3);
    Eigen::Index row = 0;
    for (int s = 0; s < cfg.n_sessions; ++s) {
        char sid[32];
        std::snprintf(sid, sizeof sid, "S%03d", s);
        Vector offset(d);
        for (Eigen::Index j = 0; j < d; ++j)
            offset(j) = cfg.session_effect * normal01(rng);
        for (int k = 0; k < per_session; ++k, ++row) {
            const bool targeted = k < cfg.clips_per_session;
            const int y = uniform01(rng) < cfg.positive_rate ? 1 : 0;
            const double c = (y ? 0.5 : -0.5) * cfg.cluster_separation;
            const double e = cfg.nuisance_scale * normal01(rng);
            Vector x(d);
            for (Eigen::Index j = 0; j < d; ++j)
                x(j) = normal01(rng);
            x.head(da) += ua * (c + (1.0 - r) * e);
            x.tail(db) += ub * (r * c + (1.0 - r) * e);
            x += offset;
            t.values.row(row).head(d) = x.transpose();
            t.values.row(row).tail(3).setOnes();

            const ClipKind kind = targeted ? (k % 2 ? ClipKind::targeted_overlap : ClipKind::targeted_gap)
                                           : ClipKind::non_targeted;
            const double start = 10.0 + 7.0 * k;
            ClipManifest m{std::string(sid) + "_" + to_string(kind) + "_" + std::to_string(k), sid, start + 3.0,
                           start, start + 7.0, kind};
            t.clip_ids.push_back(m.clip_id);
            t.session_ids.push_back(sid);
            t.kinds.push_back(kind);
            ds.truth.push_back(y);
            if (targeted) {
                LabeledClip lc;
                lc.clip_id = m.clip_id;
                lc.n_annotators = 5;
                lc.label_fluidity = y;
                // enjoyment mostly follows fluidity
                lc.label_enjoyment = y ? (uniform01(rng) < 0.7 ? 1 : 0) : (uniform01(rng) < 0.02 ? 1 : 0);
                lc.mean_fluidity = y ? 2.0 : 3.6;
                lc.mean_enjoyment = lc.label_enjoyment ? 2.2 : 3.8;
                ds.labels.push_back(std::move(lc));
            }
            ds.manifest.push_back(std::move(m));
        }
    }
    return ds;
}

// ---------------------------------------------------------------- audio

struct SpeakerScript {
    std::string speaker_id;
    std::vector<std::pair<double, double>> speech; // [start, end) seconds
};

struct AudioScript {
    std::string session_id = "synth";
    double duration = 60.0;
    int sample_rate = 16000;
    std::vector<SpeakerScript> speakers;
};

struct SynthAudioConfig {
    double speech_rms = 0.15;
    double silence_rms = 0.005;
    /// One-pole low-pass coefficient for the band-limited noise.
    double smoothing = 0.6;
    std::uint64_t seed = 0;
};

/// Speech intervals carry low-passed Gaussian noise at `speech_rms`, the rest
/// of each track at `silence_rms`.
inline SessionAudio synth_audio_session(const AudioScript& script, const SynthAudioConfig& cfg = {})
{
    require(script.sample_rate > 0 && script.duration > 0, "synth audio: bad duration or rate");
    SessionAudio out;
    out.session_id = script.session_id;
    out.sample_rate = script.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(script.duration * script.sample_rate));
    const double a = cfg.smoothing;
    const double unit = 1.0 / std::sqrt((1.0 - a) / (1.0 + a)); // normalizes the filter's output variance
    std::uint64_t tag = 0;
    for (const auto& sp : script.speakers) {
        auto iv = sp.speech;
        std::sort(iv.begin(), iv.end());
        for (std::size_t i = 0; i < iv.size(); ++i) {
            require(iv[i].first >= 0 && iv[i].second <= script.duration + 1e-9 && iv[i].first < iv[i].second,
                    "synth audio: interval outside session for speaker " + sp.speaker_id);
            if (i > 0)
                require(iv[i].first >= iv[i - 1].second,
                        "synth audio: overlapping intervals within speaker " + sp.speaker_id);
        }
        std::vector<double> gain(n, cfg.silence_rms);
        for (auto [s, e] : iv) {
            const auto b = static_cast<std::size_t>(std::llround(s * script.sample_rate));
            const auto f = std::min(n, static_cast<std::size_t>(std::llround(e * script.sample_rate)));
            std::fill(gain.begin() + static_cast<std::ptrdiff_t>(b), gain.begin() + static_cast<std::ptrdiff_t>(f),
                      cfg.speech_rms);
        }
        Rng rng(mix_seed(cfg.seed, ++tag));
        Track tr{sp.speaker_id, std::vector<double>(n)};
        double y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y = a * y + (1.0 - a) * normal01(rng);
            tr.samples[i] = std::clamp(gain[i] * unit * y, -1.0, 1.0);
        }
        out.tracks.push_back(std::move(tr));
    }
    require(!out.tracks.empty(), "synth audio: script has no speakers");
    return out;
}

} // namespace fluidlab
