#include "harness/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "harness/errors.hpp"
#include "harness/klr.hpp"

namespace harness {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw DataError("missing value in column " + context);
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size())
        throw DataError("non-numeric value '" + cell + "' in column " + context);
    if (!std::isfinite(v)) throw DataError("non-finite value in column " + context);
    return v;
}

long parse_long(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw DataError("missing value in column " + context);
    char* end = nullptr;
    long v = std::strtol(cell.c_str(), &end, 10);
    if (end != cell.c_str() + cell.size())
        throw DataError("non-integer value '" + cell + "' in column " + context);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.precision(17);
    return out;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line);
    if (header.size() < 3 || header[0] != "y" || header[1] != "year")
        throw DataError("dataset header must start with y,year,g1,...");

    int levels = 0;
    std::size_t at = 2;
    while (at < header.size() && header[at] == "g" + std::to_string(levels + 1)) {
        ++levels;
        ++at;
    }
    if (levels == 0) throw DataError("dataset header needs at least one group column g1");
    std::vector<std::string> covariate_names(header.begin() + at, header.end());
    const Index p = static_cast<Index>(covariate_names.size());
    if (p == 0) throw DataError("dataset has no covariate columns");

    std::vector<double> ys;
    std::vector<int> years;
    std::vector<std::vector<long>> raw_labels(levels);
    std::vector<double> xflat;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(ys.size() + 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        double yv = parse_double(cells[0], "y");
        if (yv == 0.0) yv = -1.0;  // accept {0,1} coding
        if (yv != 1.0 && yv != -1.0)
            throw DataError("outcome must be in {-1,1} or {0,1}, got " + cells[0]);
        ys.push_back(yv);
        years.push_back(static_cast<int>(parse_long(cells[1], "year")));
        for (int g = 0; g < levels; ++g)
            raw_labels[g].push_back(parse_long(cells[2 + g], "g" + std::to_string(g + 1)));
        for (Index j = 0; j < p; ++j)
            xflat.push_back(parse_double(cells[2 + levels + j], covariate_names[j]));
    }
    const Index n = static_cast<Index>(ys.size());
    if (n == 0) throw DataError("dataset file '" + path + "' has no data rows");

    Dataset data;
    data.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                      Eigen::RowMajor>>(xflat.data(), n, p);
    data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    data.year = Eigen::Map<Eigen::VectorXi>(years.data(), n);
    data.covariate_names = covariate_names;

    // Dense 0-based recode per level, keeping original values as names.
    data.group_labels.resize(n, levels);
    data.group_names.resize(levels);
    for (int g = 0; g < levels; ++g) {
        std::set<long> distinct(raw_labels[g].begin(), raw_labels[g].end());
        std::map<long, int> code;
        for (long v : distinct) {
            code[v] = static_cast<int>(data.group_names[g].size());
            data.group_names[g].push_back(std::to_string(v));
        }
        for (Index i = 0; i < n; ++i) data.group_labels(i, g) = code[raw_labels[g][i]];
    }
    data.validate();
    return data;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::ofstream out = open_out(path);
    out << "y,year";
    for (int g = 0; g < data.levels(); ++g) out << ",g" << g + 1;
    for (Index j = 0; j < data.p(); ++j) {
        out << ',';
        out << (static_cast<std::size_t>(j) < data.covariate_names.size()
                    ? data.covariate_names[j]
                    : "x" + std::to_string(j + 1));
    }
    out << '\n';
    for (Index i = 0; i < data.n(); ++i) {
        out << static_cast<int>(data.y[i]) << ',' << data.year[i];
        for (int g = 0; g < data.levels(); ++g) {
            int c = data.group_labels(i, g);
            bool named = static_cast<int>(data.group_names.size()) > g &&
                         static_cast<int>(data.group_names[g].size()) > c;
            out << ',' << (named ? data.group_names[g][c] : std::to_string(c));
        }
        for (Index j = 0; j < data.p(); ++j) out << ',' << data.X(i, j);
        out << '\n';
    }
}

void save_scores_csv(const Eigen::VectorXd& scores, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "id,score,probability\n";
    for (Index i = 0; i < scores.size(); ++i)
        out << i << ',' << scores[i] << ',' << sigmoid(scores[i]) << '\n';
}

Eigen::VectorXd load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("scores file '" + path + "' is empty");
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() < 2) throw DataError("malformed scores row: " + line);
        values.push_back(parse_double(cells[1], "score"));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
}

void save_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                     const std::vector<std::string>& col_labels, const std::string& corner,
                     const std::string& path) {
    if (static_cast<Index>(row_labels.size()) != matrix.rows() ||
        static_cast<Index>(col_labels.size()) != matrix.cols())
        throw ShapeError("matrix labels do not match matrix shape");
    std::ofstream out = open_out(path);
    out << corner;
    for (const auto& c : col_labels) out << ',' << c;
    out << '\n';
    for (Index i = 0; i < matrix.rows(); ++i) {
        out << row_labels[i];
        for (Index j = 0; j < matrix.cols(); ++j) out << ',' << matrix(i, j);
        out << '\n';
    }
}

void save_metrics_csv(const StratifiedReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "scope,n,auroc,prauc,positive_rate,status\n";
    for (const auto& r : report.reports)
        out << r.scope << ',' << r.n << ',' << r.auroc << ',' << r.prauc << ','
            << r.positive_rate << ",ok\n";
    for (const auto& s : report.skipped)
        out << s.scope << ',' << s.n << ",,,,skipped: " << s.reason << '\n';
}

void save_gram_heatmap_csv(const Eigen::MatrixXd& K, const std::vector<Index>& order,
                           const Eigen::MatrixXi& group_labels, const std::string& path) {
    if (K.rows() != K.cols() || static_cast<Index>(order.size()) != K.rows())
        throw ShapeError("heatmap export expects a square Gram and a full ordering");
    auto group_path = [&](Index i) {
        std::string s;
        for (Index level = 0; level < group_labels.cols(); ++level) {
            if (level) s += '.';
            s += std::to_string(group_labels(i, level));
        }
        return s;
    };
    std::ofstream out = open_out(path);
    out << "sample,group";
    for (Index j : order) out << ",k" << j;
    out << '\n';
    for (Index i : order) {
        out << i << ',' << group_path(i);
        for (Index j : order) out << ',' << K(i, j);
        out << '\n';
    }
}

}  // namespace harness
