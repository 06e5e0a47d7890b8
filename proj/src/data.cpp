#include "phgnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "phgnn/error.hpp"
#include "phgnn/io.hpp"

namespace fs = std::filesystem;

namespace phgnn {

std::vector<std::size_t> MultimodalDataset::dims() const {
    std::vector<std::size_t> out;
    for (const auto& m : modalities) out.push_back(m.features.cols());
    return out;
}

void MultimodalDataset::validate() const {
    const std::size_t n = num_nodes();
    require(n > 0, "dataset: no subjects");
    require(!modalities.empty(), "dataset: no modalities");
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] != 0 && labels[i] != 1)
            fail(ErrorKind::InvalidArgument, "dataset: label of subject " + std::to_string(i) + " is " +
                                                 std::to_string(labels[i]) + ", expected 0 or 1");
    for (std::size_t m = 0; m < modalities.size(); ++m) {
        const auto& mod = modalities[m];
        if (mod.features.rows() != n || mod.present.size() != n)
            fail(ErrorKind::Shape, "dataset: modality " + std::to_string(m) + " does not have " + std::to_string(n) + " rows");
        if (mod.features.cols() == 0) fail(ErrorKind::Shape, "dataset: modality " + std::to_string(m) + " has no columns");
        if (!mod.features.all_finite())
            fail(ErrorKind::InvalidArgument, "dataset: modality " + std::to_string(m) + " has non-finite values");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const bool any = std::any_of(modalities.begin(), modalities.end(), [i](const Modality& m) { return m.present[i]; });
        if (!any) fail(ErrorKind::InvalidArgument, "dataset: subject " + std::to_string(i) + " has no modality present");
    }
}

MultimodalDataset generate_synthetic(const SyntheticConfig& c) {
    require(c.n >= 10, "generate_synthetic: need at least 10 subjects");
    require(!c.dims.empty(), "generate_synthetic: need at least one modality");
    for (std::size_t d : c.dims) require(d > 0, "generate_synthetic: modality dims must be positive");
    require(c.class_sep >= 0.0 && std::isfinite(c.class_sep), "generate_synthetic: class_sep must be >= 0");
    require(c.missing_rate >= 0.0 && c.missing_rate < 1.0, "generate_synthetic: missing_rate must lie in [0, 1)");
    require(c.noise_std > 0.0 && std::isfinite(c.noise_std), "generate_synthetic: noise_std must be positive");

    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    MultimodalDataset ds;
    ds.name = c.name;
    ds.labels.assign(c.n, 0);
    for (std::size_t i = c.n / 2; i < c.n; ++i) ds.labels[i] = 1;
    std::shuffle(ds.labels.begin(), ds.labels.end(), rng);

    const double half_gap = 0.5 * c.class_sep * c.noise_std;
    for (std::size_t d : c.dims) {
        std::vector<double> base(d), direction(d);
        for (double& x : base) x = c.noise_std * normal(rng);
        double norm = 0.0;
        for (double& x : direction) {
            x = normal(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : direction) x /= norm;

        Modality mod{Matrix(c.n, d), std::vector<bool>(c.n, true)};
        for (std::size_t i = 0; i < c.n; ++i) {
            const double sign = ds.labels[i] == 1 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < d; ++j)
                mod.features(i, j) = base[j] + sign * half_gap * direction[j] + c.noise_std * normal(rng);
        }
        ds.modalities.push_back(std::move(mod));
    }

    if (c.missing_rate > 0.0) {
        const std::size_t m = c.dims.size();
        for (std::size_t i = 0; i < c.n; ++i) {
            std::size_t absent = 0;
            for (auto& mod : ds.modalities) {
                mod.present[i] = unit(rng) >= c.missing_rate;
                absent += !mod.present[i];
            }
            if (absent == m) {
                std::uniform_int_distribution<std::size_t> pick(0, m - 1);
                ds.modalities[pick(rng)].present[i] = true;
            }
        }
        for (auto& mod : ds.modalities)
            for (std::size_t i = 0; i < c.n; ++i)
                if (!mod.present[i]) std::fill(mod.features.row(i).begin(), mod.features.row(i).end(), 0.0);
    }
    ds.validate();
    return ds;
}

namespace {

std::string matrix_csv(const Matrix& m) {
    std::string out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += io::format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

template <typename T>
std::string column_csv(const std::vector<T>& values) {
    std::string out;
    for (const auto& v : values) out += std::to_string(static_cast<int>(v)) + "\n";
    return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in(io::read_file(path));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

Matrix read_matrix_csv(const fs::path& path, std::size_t rows, std::size_t cols) {
    const auto lines = read_lines(path);
    const std::string file = path.filename().string();
    if (lines.size() != rows)
        fail(ErrorKind::Io, file + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(lines.size()));
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string ctx = file + ": row " + std::to_string(r);
        std::string_view line = lines[r];
        std::size_t c = 0;
        while (true) {
            const auto comma = line.find(',');
            if (c >= cols) fail(ErrorKind::Io, ctx + ": more than " + std::to_string(cols) + " values");
            m(r, c++) = io::parse_double(line.substr(0, comma), ctx);
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        if (c != cols) fail(ErrorKind::Io, ctx + ": expected " + std::to_string(cols) + " values, found " + std::to_string(c));
    }
    return m;
}

std::vector<int> read_binary_column(const fs::path& path, std::size_t rows) {
    const auto lines = read_lines(path);
    const std::string file = path.filename().string();
    if (lines.size() != rows)
        fail(ErrorKind::Io, file + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(lines.size()));
    std::vector<int> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double v = io::parse_double(lines[r], file + ": row " + std::to_string(r));
        if (v != 0.0 && v != 1.0)
            fail(ErrorKind::Io, file + ": row " + std::to_string(r) + ": value '" + lines[r] + "' is not 0 or 1");
        out[r] = static_cast<int>(v);
    }
    return out;
}

}  // namespace

void save_dataset(const MultimodalDataset& ds, const fs::path& dir) {
    ds.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, dir.string() + ": " + ec.message());
    nlohmann::json meta{{"format", "phgnn-dataset"},
                        {"version", 1},
                        {"name", ds.name},
                        {"n", ds.num_nodes()},
                        {"m", ds.num_modalities()},
                        {"dims", ds.dims()}};
    io::write_file_atomic(dir / "meta", meta.dump(1) + "\n");
    for (std::size_t i = 0; i < ds.num_modalities(); ++i) {
        io::write_file_atomic(dir / ("modality_" + std::to_string(i) + ".csv"), matrix_csv(ds.modalities[i].features));
        io::write_file_atomic(dir / ("present_" + std::to_string(i) + ".csv"), column_csv(ds.modalities[i].present));
    }
    io::write_file_atomic(dir / "labels.csv", column_csv(ds.labels));
}

MultimodalDataset load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir.string() + ": dataset directory not found");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(io::read_file(dir / "meta"));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "meta: malformed: " + std::string(e.what()));
    }
    MultimodalDataset ds;
    std::size_t n = 0;
    std::vector<std::size_t> dims;
    try {
        n = meta.at("n").get<std::size_t>();
        dims = meta.at("dims").get<std::vector<std::size_t>>();
        ds.name = meta.value("name", std::string("dataset"));
        if (meta.at("m").get<std::size_t>() != dims.size()) fail(ErrorKind::Io, "meta: m does not match dims");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, "meta: " + std::string(e.what()));
    }
    if (n == 0 || dims.empty()) fail(ErrorKind::Io, "meta: dataset must have subjects and modalities");

    ds.labels = read_binary_column(dir / "labels.csv", n);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        Modality mod;
        mod.features = read_matrix_csv(dir / ("modality_" + std::to_string(i) + ".csv"), n, dims[i]);
        const auto present = read_binary_column(dir / ("present_" + std::to_string(i) + ".csv"), n);
        mod.present.assign(present.begin(), present.end());
        ds.modalities.push_back(std::move(mod));
    }
    ds.validate();
    return ds;
}

FusedGraph build_fused_hypergraph(const MultimodalDataset& ds, std::size_t k, bool pairwise,
                                  std::span<const std::size_t> modality_subset) {
    ds.validate();
    std::vector<std::size_t> chosen(modality_subset.begin(), modality_subset.end());
    if (chosen.empty()) {
        chosen.resize(ds.num_modalities());
        std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    }
    std::vector<Hypergraph> parts;
    std::vector<Matrix> features;
    for (std::size_t m : chosen) {
        require(m < ds.num_modalities(), "build_fused_hypergraph: modality " + std::to_string(m) + " does not exist");
        const Modality& mod = ds.modalities[m];
        const auto present = static_cast<std::size_t>(std::count(mod.present.begin(), mod.present.end(), true));
        if (present < k + 1)
            fail(ErrorKind::InvalidArgument, "build_fused_hypergraph: modality " + std::to_string(m) + " has " +
                                                 std::to_string(present) + " present subjects, k = " + std::to_string(k) +
                                                 " needs at least " + std::to_string(k + 1));
        parts.push_back(knn_hyperedges_subset(mod.features, mod.present, k, pairwise));
        Matrix f = mod.features;
        for (std::size_t i = 0; i < ds.num_nodes(); ++i)
            if (!mod.present[i]) std::fill(f.row(i).begin(), f.row(i).end(), 0.0);
        features.push_back(std::move(f));
    }
    return {coequal_fuse(parts), fuse_features(features)};
}

std::vector<bool> FoldSplit::train_mask(std::size_t fold) const {
    std::vector<bool> m(fold_of.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = fold_of[i] != fold;
    return m;
}

std::vector<bool> FoldSplit::validation_mask(std::size_t fold) const {
    std::vector<bool> m(fold_of.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = fold_of[i] == fold;
    return m;
}

FoldSplit split_folds(std::span<const int> labels, std::size_t k_folds, std::uint64_t seed) {
    require(k_folds >= 2, "split_folds: need at least 2 folds");
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, "split_folds: labels must be 0 or 1");
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < 2; ++c)
        if (by_class[c].size() < k_folds)
            fail(ErrorKind::InvalidArgument, "split_folds: class " + std::to_string(c) + " has " +
                                                 std::to_string(by_class[c].size()) + " members, fewer than " +
                                                 std::to_string(k_folds) + " folds");
    std::mt19937_64 rng(seed);
    FoldSplit split{k_folds, std::vector<std::size_t>(labels.size())};
    std::size_t next = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t idx : members) split.fold_of[idx] = next++ % k_folds;
    }
    return split;
}

}  // namespace phgnn
