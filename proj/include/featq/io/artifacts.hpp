#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include <featq/eval/evaluate.hpp>
#include <featq/rl/trainer.hpp>

namespace featq {

/// Shortest round-trip decimal form of a double: deterministic bytes,
/// re-parses to the identical value.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path, bool append = false) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    return out;
}

/// Streaming CSV log of training episodes.
class EpisodeLogWriter {
public:
    explicit EpisodeLogWriter(const std::filesystem::path& path, bool append = false)
        : out_(open_out(path, append)) {
        if (!append) out_ << "episode,cost,steps,prediction,label,correct\n";
    }

    void write(const EpisodeOutcome& o) {
        out_ << o.episode << ',' << format_double(o.cost) << ',' << o.steps << ','
             << o.prediction << ',' << (o.labeled ? o.label : -1) << ','
             << (o.correct ? 1 : 0) << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline void write_curve_csv(const std::filesystem::path& path,
                            const AccuracyCostCurve& curve) {
    auto out = open_out(path);
    out << "cost,accuracy\n";
    for (const auto& p : curve.points)
        out << format_double(p.cost) << ',' << format_double(p.accuracy) << '\n';
}

inline AccuracyCostCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    AccuracyCostCurve curve;
    std::string line;
    if (!std::getline(in, line) || line != "cost,accuracy")
        throw ParseError("bad curve header in " + path.string(), 1);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("expected cost,accuracy", lineno);
        curve.points.push_back(
            {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return curve;
}

inline void write_calibration_csv(const std::filesystem::path& path,
                                  const CalibrationTable& tab) {
    auto out = open_out(path);
    out << "bin_lo,bin_hi,count,mean_certainty,accuracy\n";
    for (const auto& b : tab.bins)
        out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count
            << ',' << format_double(b.mean_certainty) << ','
            << format_double(b.accuracy) << '\n';
}

inline void write_order_matrix_csv(const std::filesystem::path& path,
                                   const Eigen::MatrixXi& m,
                                   const std::vector<std::string>& feature_names) {
    auto out = open_out(path);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << (j < static_cast<Eigen::Index>(feature_names.size())
                    ? feature_names[j]
                    : "f" + std::to_string(j));
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

class TraceWriter {
public:
    explicit TraceWriter(const std::filesystem::path& path, bool append = false)
        : out_(open_out(path, append)) {
        if (!append) out_ << "episode,val_accuracy,val_auacc\n";
    }

    void write(const TracePoint& t) {
        out_ << t.episode << ',' << format_double(t.val_accuracy) << ','
             << format_double(t.val_auacc) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

} // namespace featq
