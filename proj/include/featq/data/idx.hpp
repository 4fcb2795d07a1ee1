#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <zlib.h>

#include <featq/data/dataset.hpp>

namespace featq {

namespace detail {

/// Whole-file read through zlib, which transparently handles both gzipped
/// and plain files.
inline std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw InputError("cannot open " + path);
    std::vector<std::uint8_t> out;
    std::uint8_t chunk[1 << 16];
    int n;
    while ((n = gzread(f, chunk, sizeof(chunk))) > 0)
        out.insert(out.end(), chunk, chunk + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw FormatError("decompression error reading " + path);
    return out;
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t pos) {
    if (pos + 4 > b.size())
        throw FormatError("truncated header", pos);
    return (static_cast<std::uint32_t>(b[pos]) << 24) |
           (static_cast<std::uint32_t>(b[pos + 1]) << 16) |
           (static_cast<std::uint32_t>(b[pos + 2]) << 8) |
           static_cast<std::uint32_t>(b[pos + 3]);
}

} // namespace detail

/// IDX image/label pair loader (the classic big-endian format, magic
/// 0x00000803 for u8 rank-3 images and 0x00000801 for u8 rank-1 labels).
/// Pixels scale to [0, 1]; features are named px0..px(d-1) and priced as
/// unit-cost singletons. Gzipped files are handled transparently.
inline Dataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
    const auto img = detail::read_maybe_gz(images_path);
    const auto lab = detail::read_maybe_gz(labels_path);

    if (detail::be32(img, 0) != 0x00000803u)
        throw FormatError("bad image magic in " + images_path, 0);
    const std::size_t n = detail::be32(img, 4);
    const std::size_t rows = detail::be32(img, 8);
    const std::size_t cols = detail::be32(img, 12);
    const std::size_t d = rows * cols;
    if (img.size() != 16 + n * d)
        throw FormatError("image payload has " + std::to_string(img.size() - 16) +
                              " bytes, expected " + std::to_string(n * d),
                          16);

    if (detail::be32(lab, 0) != 0x00000801u)
        throw FormatError("bad label magic in " + labels_path, 0);
    const std::size_t n_lab = detail::be32(lab, 4);
    if (lab.size() != 8 + n_lab)
        throw FormatError("label payload has " + std::to_string(lab.size() - 8) +
                              " bytes, expected " + std::to_string(n_lab),
                          8);
    if (n != n_lab)
        throw FormatError("image count " + std::to_string(n) +
                          " does not match label count " + std::to_string(n_lab));

    Dataset ds;
    ds.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.labels.resize(n);
    int max_label = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* px = img.data() + 16 + i * d;
        for (std::size_t j = 0; j < d; ++j)
            ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<double>(px[j]) / 255.0;
        ds.labels[i] = static_cast<int>(lab[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.n_classes = max_label + 1;
    ds.feature_names.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
        ds.feature_names.push_back("px" + std::to_string(j));
    if (d > 0) ds.costs = CostSchedule::uniform(static_cast<int>(d));
    ds.validate();
    return ds;
}

} // namespace featq
