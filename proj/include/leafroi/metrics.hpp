#pragma once

// 3-class confusion matrices and their summary statistics.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "leafroi/core.hpp"
#include "leafroi/detection.hpp"

namespace leafroi::metrics {

/// Rows are the actual class, columns the predicted class, both in EB, LB, HL order.
/// Images with no decision are tallied separately per actual class.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts{};
    std::array<std::uint64_t, kClassCount> no_decision{};

    std::uint64_t decided_total() const noexcept {
        std::uint64_t t = 0;
        for (const auto& row : counts) {
            for (auto v : row) t += v;
        }
        return t;
    }
    std::uint64_t undecided_total() const noexcept {
        return no_decision[0] + no_decision[1] + no_decision[2];
    }
    std::uint64_t trace() const noexcept { return counts[0][0] + counts[1][1] + counts[2][2]; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
        for (std::size_t i = 0; i < kClassCount; ++i) {
            for (std::size_t j = 0; j < kClassCount; ++j) counts[i][j] += o.counts[i][j];
            no_decision[i] += o.no_decision[i];
        }
        return *this;
    }
    friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) noexcept { return a += b; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix accumulate(ConfusionMatrix cm, ClassLabel actual, const detection::ImageDecision& decision) {
    if (decision) {
        ++cm.counts[ordinal(actual)][ordinal(*decision)];
    } else {
        ++cm.no_decision[ordinal(actual)];
    }
    return cm;
}

enum class NoDecisionPolicy { AsError, Exclude };

inline std::string_view to_string(NoDecisionPolicy p) noexcept {
    return p == NoDecisionPolicy::AsError ? "as_error" : "exclude";
}

inline NoDecisionPolicy policy_from_string(std::string_view s) {
    if (s == "as_error" || s == "as-error") return NoDecisionPolicy::AsError;
    if (s == "exclude") return NoDecisionPolicy::Exclude;
    throw ValidationError("unknown no-decision policy '" + std::string(s) + "'");
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Macro values are unweighted means over the three classes. Two F conventions
/// are kept: the mean of per-class F1 and the harmonic mean of macro P and R.
struct SummaryMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1_mean = 0.0;
    double f1_of_macros = 0.0;
    std::array<ClassMetrics, kClassCount> per_class{};
};

inline double harmonic_mean(double a, double b) noexcept { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

/// Per-class precision/recall use column/row sums of decided images; zero
/// denominators give 0. AsError keeps undecided images in the accuracy
/// denominator, Exclude drops them.
inline SummaryMetrics summarize(const ConfusionMatrix& cm, NoDecisionPolicy policy = NoDecisionPolicy::AsError) {
    const std::uint64_t total =
        cm.decided_total() + (policy == NoDecisionPolicy::AsError ? cm.undecided_total() : 0);
    if (total == 0) throw DegenerateInputError("summarize: confusion matrix has no counted images");

    SummaryMetrics m;
    m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    for (std::size_t k = 0; k < kClassCount; ++k) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t j = 0; j < kClassCount; ++j) {
            row += cm.counts[k][j];
            col += cm.counts[j][k];
        }
        const auto diag = static_cast<double>(cm.counts[k][k]);
        auto& c = m.per_class[k];
        c.precision = col == 0 ? 0.0 : diag / static_cast<double>(col);
        c.recall = row == 0 ? 0.0 : diag / static_cast<double>(row);
        c.f1 = harmonic_mean(c.precision, c.recall);
        m.macro_precision += c.precision;
        m.macro_recall += c.recall;
        m.macro_f1_mean += c.f1;
    }
    m.macro_precision /= kClassCount;
    m.macro_recall /= kClassCount;
    m.macro_f1_mean /= kClassCount;
    m.f1_of_macros = harmonic_mean(m.macro_precision, m.macro_recall);
    return m;
}

// ---------------------------------------------------------------------------
// CSV: three rows of three integers, optional fourth row of no-decision counts.

inline ConfusionMatrix parse_confusion_csv(std::istream& in) {
    ConfusionMatrix cm;
    std::vector<std::array<std::uint64_t, kClassCount>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
            continue;
        }
        std::array<std::uint64_t, kClassCount> row{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
            if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
                throw FormatError("confusion csv line " + std::to_string(line_no) + ": '" + t +
                                  "' is not a non-negative integer");
            }
            if (n >= kClassCount) {
                throw FormatError("confusion csv line " + std::to_string(line_no) + ": more than 3 values");
            }
            row[n++] = std::stoull(t);
        }
        if (n != kClassCount) {
            throw FormatError("confusion csv line " + std::to_string(line_no) + ": expected 3 values");
        }
        rows.push_back(row);
    }
    if (rows.size() != 3 && rows.size() != 4) {
        throw FormatError("confusion csv: expected 3 or 4 rows, got " + std::to_string(rows.size()));
    }
    for (std::size_t i = 0; i < kClassCount; ++i) cm.counts[i] = rows[i];
    if (rows.size() == 4) cm.no_decision = rows[3];
    return cm;
}

inline ConfusionMatrix read_confusion_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_confusion_csv(in);
}

inline std::string format_confusion_csv(const ConfusionMatrix& cm) {
    std::string out;
    auto row = [&](const std::array<std::uint64_t, kClassCount>& r) {
        out += std::to_string(r[0]) + "," + std::to_string(r[1]) + "," + std::to_string(r[2]) + "\n";
    };
    for (const auto& r : cm.counts) row(r);
    if (cm.undecided_total() > 0) row(cm.no_decision);
    return out;
}

// ---------------------------------------------------------------------------
// Comparison against externally reported figures

/// Figures printed alongside a matrix elsewhere; any subset may be given.
/// The F-measure is matched against both conventions.
struct ReportedFigures {
    std::optional<double> accuracy;
    std::optional<double> macro_precision;
    std::optional<double> macro_recall;
    std::optional<double> f_measure;
};

inline std::vector<std::string> compare_with_reported(const SummaryMetrics& m, const ReportedFigures& ref,
                                                      double tolerance, const std::string& scope) {
    std::vector<std::string> flags;
    auto fmt = [](double v) {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(4);
        os << v;
        return os.str();
    };
    auto check = [&](const char* name, double derived, const std::optional<double>& reported) {
        if (reported && std::abs(derived - *reported) > tolerance) {
            flags.push_back(scope + ": derived " + name + " " + fmt(derived) + " disagrees with reported " +
                            fmt(*reported));
        }
    };
    check("accuracy", m.accuracy, ref.accuracy);
    check("macro_precision", m.macro_precision, ref.macro_precision);
    check("macro_recall", m.macro_recall, ref.macro_recall);
    if (ref.f_measure && std::abs(m.macro_f1_mean - *ref.f_measure) > tolerance &&
        std::abs(m.f1_of_macros - *ref.f_measure) > tolerance) {
        flags.push_back(scope + ": reported f_measure " + fmt(*ref.f_measure) +
                        " matches neither macro_f1_mean " + fmt(m.macro_f1_mean) + " nor f1_of_macros " +
                        fmt(m.f1_of_macros));
    }
    return flags;
}

}  // namespace leafroi::metrics
