#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bularag/embed.hpp"

namespace bularag {

/// One trial: a question, its reformulation, both answers and the
/// annotator columns (left empty by the harness, filled in by people).
struct EvalRow {
    std::string datetime_iso;
    std::string question;
    std::string answer;
    double time_s = 0.0;
    std::optional<int> precision_a1;
    std::optional<int> precision_a2;
    std::optional<int> completude_a1;
    std::optional<int> completude_a2;
    std::optional<double> consistency_pct;
    std::string question_ref;
    std::string answer_ref;
    std::optional<double> time_ref_s;

    friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

inline constexpr std::array<std::string_view, 12> kCsvHeader = {
    "DataHora",      "Pergunta",      "Resposta",    "Tempo (s)",           "Precisão A1",          "Precisão A2",
    "Completude A1", "Completude A2", "Consistência", "Pergunta Reformulada", "Resposta Reformulada", "Tempo Ref (s)",
};

std::string rows_to_csv(const std::vector<EvalRow>& rows);
/// Throws Error{MalformedCsv} for a wrong header or arity and
/// Error{OutOfRange} for annotator values outside {0,1} / 1..5.
std::vector<EvalRow> rows_from_csv(std::string_view data);
void write_rows_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path);
std::vector<EvalRow> read_rows_csv(const std::filesystem::path& path);

struct EvalQuestion {
    std::string text;
    std::string reformulation;  // may be empty
};

/// One question per line; an indented line right after it is its
/// reformulation. Blank lines and lines starting with '#' are skipped.
std::vector<EvalQuestion> parse_questions(std::string_view content);
std::vector<EvalQuestion> load_questions(const std::filesystem::path& path);
/// The ten standard questions with their reformulations.
std::vector<EvalQuestion> default_questions();

/// Answers a question; throwing marks the trial as failed.
using AskFn = std::function<std::string(const std::string& question)>;

struct EvalOptions {
    /// Runs questions concurrently. Timings then overlap, so summaries
    /// built from such rows should not report time.
    bool parallel = false;
};

/// Timed ask() on each question and its reformulation, consistency between
/// the two answers, annotator columns empty. A failing ask() is recorded as
/// "ERRO: <message>" and the run continues.
std::vector<EvalRow> run_eval(const std::vector<EvalQuestion>& questions, const AskFn& ask, const Embedder& embedder,
                              const EvalOptions& options = {});

/// max(0, cosine) * 100 rounded to 2 decimals; 0 (with a warning) when an
/// answer embeds to the zero vector.
double consistency_score(std::string_view answer, std::string_view answer_ref, const Embedder& embedder);

double precision_mean(std::span<const int> labels);
double completeness_mean(std::span<const int> scores);
double time_mean(std::span<const double> times);

struct KappaResult {
    double value = 0.0;
    /// Chance agreement was 1 (both raters constant and equal); value is 1
    /// by convention.
    bool degenerate = false;
};

/// (p_o - p_e) / (1 - p_e) over arbitrary integer categories.
KappaResult cohen_kappa(std::span<const int> a1, std::span<const int> a2);

enum class KappaBand { Poor, Slight, Fair, Moderate, Substantial, AlmostPerfect };

std::string_view to_string(KappaBand band);
/// Landis-Koch bands with closed-open boundaries so that no value falls in
/// a gap: poor < 0 <= slight < 0.21 <= fair < 0.41 <= moderate < 0.61 <=
/// substantial <= 0.80 < almost perfect.
KappaBand interpret_kappa(double k);

// Reference thresholds.
inline constexpr double kPrecisionTarget = 0.85;
inline constexpr double kCompletenessTarget = 4.0;
inline constexpr double kTimeTargetS = 5.0;
inline constexpr double kConsistencyTargetPct = 80.0;
inline constexpr double kKappaTarget = 0.61;

struct ThresholdCheck {
    std::string metric;
    std::string expected;
    std::optional<double> observed;  // absent when there was nothing to measure
    std::optional<bool> pass;
};

struct MetricsSummary {
    std::size_t rows = 0;
    std::optional<double> precision_a1_mean;
    std::optional<double> precision_a2_mean;
    std::optional<double> completude_a1_mean;
    std::optional<double> completude_a2_mean;
    std::optional<double> time_mean_s;
    std::optional<double> time_ref_mean_s;
    std::optional<double> consistency_mean_pct;
    std::optional<double> kappa_precision;
    bool kappa_degenerate = false;
    std::optional<KappaBand> kappa_band;
    std::vector<ThresholdCheck> threshold_report;

    [[nodiscard]] bool all_pass() const;
};

/// Throws Error{EmptyInput} on no rows.
MetricsSummary summarize(const std::vector<EvalRow>& rows, bool include_time = true);

std::string format_summary(const MetricsSummary& summary);
std::string summary_to_json(const MetricsSummary& summary);

}  // namespace bularag
