#pragma once

// Readers and writers for every on-disk artifact. Formats are documented in
// docs/formats.md.

#include "fluidlab/core.hpp"
#include "fluidlab/records.hpp"
#include "fluidlab/wav.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fluidlab {

namespace fs = std::filesystem;

/// Features and embeddings are written at float32 round-trip precision.
inline constexpr int kFeatureDigits = 9;
/// Model parameters and metric values are written at double round-trip precision.
inline constexpr int kExactDigits = 17;

// ---------------------------------------------------------------- csv helpers

inline std::vector<std::string> split_csv_line(std::string_view line, char delim = ',')
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t p = line.find(delim, start);
        if (p == std::string_view::npos) {
            cells.emplace_back(line.substr(start));
            break;
        }
        cells.emplace_back(line.substr(start, p - start));
        start = p + 1;
    }
    return cells;
}

inline std::string location(const fs::path& path, std::size_t line_no)
{
    return path.string() + ":" + std::to_string(line_no);
}

inline double parse_double(const std::string& cell, const std::string& where)
{
    double v = 0.0;
    const char* b = cell.data();
    const char* e = cell.data() + cell.size();
    while (b < e && *b == ' ')
        ++b;
    if (b < e && *b == '+')
        ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || b == e)
        throw ValidationError(where + ": non-numeric cell '" + cell + "'");
    return v;
}

template <typename Int = long>
Int parse_int(const std::string& cell, const std::string& where)
{
    Int v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
        throw ValidationError(where + ": expected integer, got '" + cell + "'");
    return v;
}

inline std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    return out;
}

inline std::string join_folds(const std::vector<int>& folds, char sep = '-')
{
    std::string s;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        if (i)
            s += sep;
        s += std::to_string(folds[i]);
    }
    return s;
}

// ---------------------------------------------------------------- audio

/// Reads `<speaker_id>.wav` files from a session directory. Tracks are sorted
/// by speaker id and truncated to the shortest track.
inline SessionAudio read_session_audio(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw ValidationError(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && ext == ".wav")
            files.push_back(e.path());
    }
    if (files.empty())
        throw ValidationError(dir.string() + ": zero tracks (no .wav files)");
    std::sort(files.begin(), files.end());

    SessionAudio session;
    session.session_id = fs::absolute(dir).lexically_normal().filename().string();
    if (session.session_id.empty())
        session.session_id = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    for (const auto& f : files) {
        WavData w = read_wav(f);
        if (session.tracks.empty())
            session.sample_rate = w.sample_rate;
        else if (w.sample_rate != session.sample_rate)
            throw ValidationError(dir.string() + ": mismatched sample rates (" + std::to_string(session.sample_rate) +
                                  " vs " + std::to_string(w.sample_rate) + " in " + f.filename().string() + ")");
        session.tracks.push_back({f.stem().string(), std::move(w.samples)});
    }
    std::size_t n = session.tracks.front().samples.size();
    for (const auto& t : session.tracks)
        n = std::min(n, t.samples.size());
    for (auto& t : session.tracks)
        t.samples.resize(n);
    return session;
}

inline void write_session_audio(const fs::path& dir, const SessionAudio& session,
                                WavEncoding enc = WavEncoding::pcm16)
{
    fs::create_directories(dir);
    for (const auto& t : session.tracks)
        write_wav(dir / (t.speaker_id + ".wav"), t.samples, session.sample_rate, enc);
}

// ---------------------------------------------------------------- manifest

inline void check_unique_clip_ids(const std::vector<ClipManifest>& clips)
{
    std::unordered_set<std::string> seen;
    for (const auto& c : clips)
        if (!seen.insert(c.clip_id).second)
            throw ValidationError("duplicate clip_id '" + c.clip_id + "'");
}

inline nlohmann::ordered_json to_json(const ClipManifest& c)
{
    nlohmann::ordered_json j;
    j["clip_id"] = c.clip_id;
    j["session_id"] = c.session_id;
    j["mark_time"] = c.mark_time;
    j["start"] = c.start;
    j["end"] = c.end;
    j["kind"] = to_string(c.kind);
    return j;
}

inline void write_manifest(const std::vector<ClipManifest>& clips, const fs::path& path)
{
    check_unique_clip_ids(clips);
    auto out = open_output(path);
    for (const auto& c : clips)
        out << to_json(c).dump() << '\n';
}

inline std::vector<ClipManifest> read_manifest(const fs::path& path)
{
    auto in = open_input(path);
    std::vector<ClipManifest> clips;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        ClipManifest c;
        try {
            const auto j = nlohmann::json::parse(line);
            c.clip_id = j.at("clip_id").get<std::string>();
            c.session_id = j.at("session_id").get<std::string>();
            c.mark_time = j.at("mark_time").get<double>();
            c.start = j.at("start").get<double>();
            c.end = j.at("end").get<double>();
            c.kind = parse_clip_kind(j.at("kind").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(location(path, line_no) + ": unparsable manifest line: " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(location(path, line_no) + ": " + e.what());
        }
        if (!seen.insert(c.clip_id).second)
            throw ValidationError(location(path, line_no) + ": duplicate clip_id '" + c.clip_id + "'");
        clips.push_back(std::move(c));
    }
    return clips;
}

// ---------------------------------------------------------------- embeddings

/// Header is `clip_id,modality,v0..v{n-1}` with n the widest vector; narrower
/// modalities leave trailing cells empty. A (clip, modality) pair may repeat:
/// one row per audio frame group or per face participant.
inline std::vector<EmbeddingRecord> read_embeddings(const fs::path& path)
{
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": empty embeddings file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "clip_id" || header[1] != "modality")
        throw ValidationError(location(path, 1) + ": header must start with clip_id,modality");
    for (std::size_t i = 2; i < header.size(); ++i)
        if (header[i] != "v" + std::to_string(i - 2))
            throw ValidationError(location(path, 1) + ": expected column v" + std::to_string(i - 2) + ", got '" +
                                  header[i] + "'");

    std::vector<EmbeddingRecord> records;
    std::map<Modality, std::size_t> dims;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = split_csv_line(line);
        const std::string where = location(path, line_no);
        if (cells.size() != header.size())
            throw ValidationError(where + ": ragged row (" + std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(header.size()) + ")");
        EmbeddingRecord r;
        r.clip_id = cells[0];
        if (r.clip_id.empty())
            throw ValidationError(where + ": empty clip_id");
        try {
            r.modality = parse_modality(cells[1]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        std::size_t n = 2;
        while (n < cells.size() && !cells[n].empty())
            ++n;
        for (std::size_t k = n; k < cells.size(); ++k)
            if (!cells[k].empty())
                throw ValidationError(where + ": non-numeric cell '' in column v" + std::to_string(n - 2));
        r.vector.reserve(n - 2);
        for (std::size_t k = 2; k < n; ++k) {
            const double v = parse_double(cells[k], where);
            if (!std::isfinite(v))
                throw ValidationError(where + ": non-finite value in clip '" + r.clip_id + "'");
            r.vector.push_back(v);
        }
        if (r.vector.empty())
            throw ValidationError(where + ": empty vector for clip '" + r.clip_id + "'");
        auto [it, fresh] = dims.emplace(r.modality, r.dims());
        if (!fresh && it->second != r.dims())
            throw ValidationError(where + ": dimension mismatch for modality " + to_string(r.modality) + " (" +
                                  std::to_string(r.dims()) + " vs " + std::to_string(it->second) + ")");
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_embeddings(const std::vector<EmbeddingRecord>& records, const fs::path& path)
{
    std::size_t width = 0;
    for (const auto& r : records)
        width = std::max(width, r.dims());
    auto out = open_output(path);
    out << "clip_id,modality";
    for (std::size_t i = 0; i < width; ++i)
        out << ",v" << i;
    out << '\n';
    for (const auto& r : records) {
        out << r.clip_id << ',' << to_string(r.modality);
        for (std::size_t i = 0; i < width; ++i) {
            out << ',';
            if (i < r.vector.size())
                out << format_double(r.vector[i], kFeatureDigits);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------- annotations

inline std::vector<Rating> read_annotations(const fs::path& path)
{
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": empty annotations file");
    const auto header = split_csv_line(line);
    if (header != std::vector<std::string>{"clip_id", "annotator_id", "fluidity", "enjoyment"})
        throw ValidationError(location(path, 1) + ": header must be clip_id,annotator_id,fluidity,enjoyment");
    std::vector<Rating> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = split_csv_line(line);
        const std::string where = location(path, line_no);
        if (cells.size() != 4)
            throw ValidationError(where + ": expected 4 cells");
        Rating r{cells[0], cells[1], static_cast<int>(parse_int(cells[2], where)),
                 static_cast<int>(parse_int(cells[3], where))};
        if (r.fluidity < 1 || r.fluidity > 5 || r.enjoyment < 1 || r.enjoyment > 5)
            throw ValidationError(where + ": ratings must be in 1..5");
        if (!seen.emplace(r.clip_id, r.annotator_id).second)
            throw ValidationError(where + ": duplicate rating of clip '" + r.clip_id + "' by '" + r.annotator_id +
                                  "'");
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_annotations(const std::vector<Rating>& ratings, const fs::path& path)
{
    auto out = open_output(path);
    out << "clip_id,annotator_id,fluidity,enjoyment\n";
    for (const auto& r : ratings)
        out << r.clip_id << ',' << r.annotator_id << ',' << r.fluidity << ',' << r.enjoyment << '\n';
}

/// One id per line; blank lines and `#` comments skipped.
inline std::vector<std::string> read_id_list(const fs::path& path)
{
    auto in = open_input(path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        ids.push_back(line);
    }
    return ids;
}

inline void write_id_list(const std::vector<std::string>& ids, const fs::path& path)
{
    auto out = open_output(path);
    for (const auto& id : ids)
        out << id << '\n';
}

// ---------------------------------------------------------------- labels

inline const std::vector<std::string>& labels_header()
{
    static const std::vector<std::string> h{"clip_id",      "mean_fluidity",  "mean_enjoyment",
                                            "n_annotators", "label_fluidity", "label_enjoyment"};
    return h;
}

inline void write_labels(const std::vector<LabeledClip>& clips, const fs::path& path)
{
    auto out = open_output(path);
    const auto& h = labels_header();
    for (std::size_t i = 0; i < h.size(); ++i)
        out << (i ? "," : "") << h[i];
    out << '\n';
    for (const auto& c : clips)
        out << c.clip_id << ',' << format_double(c.mean_fluidity, kExactDigits) << ','
            << format_double(c.mean_enjoyment, kExactDigits) << ',' << c.n_annotators << ',' << c.label_fluidity
            << ',' << c.label_enjoyment << '\n';
}

inline std::vector<LabeledClip> read_labels(const fs::path& path)
{
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != labels_header())
        throw ValidationError(location(path, 1) + ": header must be clip_id,mean_fluidity,mean_enjoyment,"
                                                  "n_annotators,label_fluidity,label_enjoyment");
    std::vector<LabeledClip> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = split_csv_line(line);
        const std::string where = location(path, line_no);
        if (cells.size() != 6)
            throw ValidationError(where + ": expected 6 cells");
        LabeledClip c;
        c.clip_id = cells[0];
        c.mean_fluidity = parse_double(cells[1], where);
        c.mean_enjoyment = parse_double(cells[2], where);
        c.n_annotators = static_cast<int>(parse_int(cells[3], where));
        c.label_fluidity = static_cast<int>(parse_int(cells[4], where));
        c.label_enjoyment = static_cast<int>(parse_int(cells[5], where));
        if ((c.label_fluidity != 0 && c.label_fluidity != 1) || (c.label_enjoyment != 0 && c.label_enjoyment != 1))
            throw ValidationError(where + ": labels must be 0 or 1");
        if (!seen.insert(c.clip_id).second)
            throw ValidationError(where + ": duplicate clip_id '" + c.clip_id + "'");
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------- features

inline void write_features(const FeatureTable& t, const fs::path& path)
{
    auto out = open_output(path);
    out << "clip_id,session_id,kind";
    for (const auto& c : t.columns)
        out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < t.rows(); ++i) {
        out << t.clip_ids[i] << ',' << t.session_ids[i] << ',' << to_string(t.kinds[i]);
        for (Eigen::Index j = 0; j < t.values.cols(); ++j)
            out << ',' << format_double(t.values(static_cast<Eigen::Index>(i), j), kFeatureDigits);
        out << '\n';
    }
}

inline FeatureTable read_features(const fs::path& path)
{
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": empty features file");
    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "clip_id" || header[1] != "session_id" || header[2] != "kind")
        throw ValidationError(location(path, 1) + ": header must start with clip_id,session_id,kind");
    FeatureTable t;
    t.columns.assign(header.begin() + 3, header.end());
    std::vector<double> flat;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = split_csv_line(line);
        const std::string where = location(path, line_no);
        if (cells.size() != header.size())
            throw ValidationError(where + ": ragged row");
        if (!seen.insert(cells[0]).second)
            throw ValidationError(where + ": duplicate clip_id '" + cells[0] + "'");
        t.clip_ids.push_back(cells[0]);
        t.session_ids.push_back(cells[1]);
        try {
            t.kinds.push_back(parse_clip_kind(cells[2]));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        for (std::size_t k = 3; k < cells.size(); ++k) {
            const double v = parse_double(cells[k], where);
            if (!std::isfinite(v))
                throw ValidationError(where + ": non-finite value in clip '" + cells[0] + "'");
            flat.push_back(v);
        }
    }
    const auto n = static_cast<Eigen::Index>(t.clip_ids.size());
    const auto d = static_cast<Eigen::Index>(t.columns.size());
    t.values = n > 0 ? Matrix(Eigen::Map<Matrix>(flat.data(), n, d)) : Matrix(0, d);
    return t;
}

// ---------------------------------------------------------------- results

inline const std::vector<std::string>& results_header()
{
    static const std::vector<std::string> h{"combo_id",  "test_folds", "labeled_folds", "labeled_fraction", "algorithm",
                                            "target",    "metric",     "value",         "seed"};
    return h;
}

inline void write_results(const std::vector<ResultRow>& rows, const fs::path& path)
{
    auto out = open_output(path);
    const auto& h = results_header();
    for (std::size_t i = 0; i < h.size(); ++i)
        out << (i ? "," : "") << h[i];
    out << '\n';
    for (const auto& r : rows)
        out << r.combo_id << ',' << r.test_folds << ',' << r.labeled_folds << ','
            << format_double(r.labeled_fraction, kExactDigits) << ',' << r.algorithm << ',' << r.target << ','
            << r.metric << ',' << format_double(r.value, kExactDigits) << ',' << r.seed << '\n';
}

inline std::vector<ResultRow> read_results(const fs::path& path)
{
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != results_header())
        throw ValidationError(location(path, 1) + ": unexpected results header");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto c = split_csv_line(line);
        const std::string where = location(path, line_no);
        if (c.size() != 9)
            throw ValidationError(where + ": expected 9 cells");
        ResultRow r;
        r.combo_id = static_cast<std::size_t>(parse_int(c[0], where));
        r.test_folds = c[1];
        r.labeled_folds = c[2];
        r.labeled_fraction = parse_double(c[3], where);
        r.algorithm = c[4];
        r.target = c[5];
        r.metric = c[6];
        r.value = parse_double(c[7], where);
        r.seed = parse_int<std::uint64_t>(c[8], where);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace fluidlab
