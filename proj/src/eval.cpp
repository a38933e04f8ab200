#include "bularag/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <future>
#include <iterator>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bularag/csv.hpp"
#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Two decimals when that is exact (the common case for times and
// percentages), otherwise the shortest round-trip form.
std::string format_real(double v) {
    char buf[64];
    if (round2(v) == v && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        double back = 0.0;
        std::from_chars(buf, buf + std::strlen(buf), back);
        if (back == v) return buf;
    }
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string format_opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string format_opt_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

double parse_real(std::string_view s, std::string_view column, std::size_t line) {
    s = text::trim(s);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
        throw Error(ErrorCode::MalformedCsv,
                    "row " + std::to_string(line) + ": '" + std::string(s) + "' is not a number in " + std::string(column));
    }
    return v;
}

std::optional<double> parse_opt_real(std::string_view s, std::string_view column, std::size_t line) {
    if (text::trim(s).empty()) return std::nullopt;
    return parse_real(s, column, line);
}

// Accepts "1" as well as "1.0" (spreadsheet exports).
std::optional<int> parse_opt_label(std::string_view s, std::string_view column, std::size_t line, int lo, int hi) {
    if (text::trim(s).empty()) return std::nullopt;
    const double v = parse_real(s, column, line);
    if (v != std::floor(v) || v < lo || v > hi) {
        throw Error(ErrorCode::OutOfRange, "row " + std::to_string(line) + ": " + std::string(column) + " = " +
                                               std::string(text::trim(s)) + " outside " + std::to_string(lo) + ".." +
                                               std::to_string(hi));
    }
    return static_cast<int>(v);
}

std::string now_iso_seconds() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
    return buf;
}

struct Trial {
    std::string answer;
    double seconds = 0.0;
    bool ok = true;
};

Trial timed_ask(const AskFn& ask, const std::string& question) {
    const auto start = std::chrono::steady_clock::now();
    Trial trial;
    try {
        trial.answer = ask(question);
    } catch (const std::exception& e) {
        trial.answer = std::string("ERRO: ") + e.what();
        trial.ok = false;
        spdlog::error("trial failed for '{}': {}", question, e.what());
    }
    trial.seconds = round2(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return trial;
}

EvalRow run_one(const EvalQuestion& q, const AskFn& ask, const Embedder& embedder) {
    EvalRow row;
    row.datetime_iso = now_iso_seconds();
    row.question = q.text;
    const auto original = timed_ask(ask, q.text);
    row.answer = original.answer;
    row.time_s = original.seconds;
    if (!q.reformulation.empty()) {
        const auto reformulated = timed_ask(ask, q.reformulation);
        row.question_ref = q.reformulation;
        row.answer_ref = reformulated.answer;
        row.time_ref_s = reformulated.seconds;
        if (original.ok && reformulated.ok) row.consistency_pct = consistency_score(row.answer, row.answer_ref, embedder);
    }
    return row;
}

template <typename T, typename Get>
std::optional<double> mean_of(const std::vector<EvalRow>& rows, Get get) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (const std::optional<T> v = get(r)) {
            sum += static_cast<double>(*v);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> average(std::optional<double> a, std::optional<double> b) {
    if (a && b) return (*a + *b) / 2.0;
    return a ? a : b;
}

ThresholdCheck check(std::string metric, std::string expected, std::optional<double> observed, bool at_least,
                     double target) {
    ThresholdCheck c{std::move(metric), std::move(expected), observed, std::nullopt};
    if (observed) c.pass = at_least ? *observed >= target : *observed <= target;
    return c;
}

}  // namespace

std::string rows_to_csv(const std::vector<EvalRow>& rows) {
    std::string out = csv::format_record(csv::Record(kCsvHeader.begin(), kCsvHeader.end()));
    for (const auto& r : rows) {
        out += csv::format_record({r.datetime_iso, r.question, r.answer, format_real(r.time_s),
                                   format_opt_int(r.precision_a1), format_opt_int(r.precision_a2),
                                   format_opt_int(r.completude_a1), format_opt_int(r.completude_a2),
                                   format_opt_real(r.consistency_pct), r.question_ref, r.answer_ref,
                                   format_opt_real(r.time_ref_s)});
    }
    return out;
}

std::vector<EvalRow> rows_from_csv(std::string_view data) {
    auto records = csv::parse(data);
    if (records.empty()) throw Error(ErrorCode::MalformedCsv, "missing header");
    const auto& header = records.front();
    if (!std::equal(header.begin(), header.end(), kCsvHeader.begin(), kCsvHeader.end())) {
        throw Error(ErrorCode::MalformedCsv, "header does not match the expected column list");
    }
    std::vector<EvalRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() == 1 && f[0].empty()) continue;  // blank line
        if (f.size() != kCsvHeader.size()) {
            throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(i) + " has " + std::to_string(f.size()) +
                                                     " fields, expected " + std::to_string(kCsvHeader.size()));
        }
        EvalRow r;
        r.datetime_iso = f[0];
        r.question = f[1];
        r.answer = f[2];
        r.time_s = parse_real(f[3], kCsvHeader[3], i);
        r.precision_a1 = parse_opt_label(f[4], kCsvHeader[4], i, 0, 1);
        r.precision_a2 = parse_opt_label(f[5], kCsvHeader[5], i, 0, 1);
        r.completude_a1 = parse_opt_label(f[6], kCsvHeader[6], i, 1, 5);
        r.completude_a2 = parse_opt_label(f[7], kCsvHeader[7], i, 1, 5);
        r.consistency_pct = parse_opt_real(f[8], kCsvHeader[8], i);
        r.question_ref = f[9];
        r.answer_ref = f[10];
        r.time_ref_s = parse_opt_real(f[11], kCsvHeader[11], i);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_rows_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write '" + path.string() + "'");
    out << rows_to_csv(rows);
    if (!out) throw Error(ErrorCode::UnreadableFile, "write failed for '" + path.string() + "'");
}

std::vector<EvalRow> read_rows_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open '" + path.string() + "'");
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return rows_from_csv(data);
}

std::vector<EvalQuestion> parse_questions(std::string_view content) {
    std::vector<EvalQuestion> out;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    bool last_was_question = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const bool indented = line.front() == ' ' || line.front() == '\t';
        if (indented) {
            if (!last_was_question) {
                throw Error(ErrorCode::InvalidArgument,
                            "line " + std::to_string(lineno) + ": reformulation without a preceding question");
            }
            out.back().reformulation = std::string(trimmed);
            last_was_question = false;
        } else {
            out.push_back({std::string(trimmed), {}});
            last_was_question = true;
        }
    }
    return out;
}

std::vector<EvalQuestion> load_questions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open '" + path.string() + "'");
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_questions(data);
}

std::vector<EvalQuestion> default_questions() {
    return {
        {"Liste os medicamentos analisados que podem ser usados por gestantes segundo as bulas.",
         "Cite os medicamentos que podem ser utilizados por mulheres grávidas conforme as bulas."},
        {"Liste os medicamentos que apresentam sonolência como efeito colateral nas bulas.",
         "Liste os medicamentos cuja bula cita sonolência como efeito colateral."},
        {"Quais medicamentos têm indicação pediátrica? Informe faixas etárias e doses mencionadas.",
         "Quais remédios são indicados para crianças? Mencione faixas etárias e doses."},
        {"Liste os medicamentos indicados para dor de cabeça ou dores leves conforme as bulas.",
         "Quais medicamentos têm indicação para dor de cabeça ou dores leves nas bulas analisadas?"},
        {"Quais medicamentos apresentam risco de reações alérgicas? Cite exemplos e trechos das bulas.",
         "Quais remédios possuem risco de alergia? Apresente exemplos conforme as bulas."},
        {"Algum medicamento analisado é contraindicado para pacientes hipertensos segundo as bulas?",
         "Há medicamentos contraindicados para pessoas com pressão alta nas bulas analisadas?"},
        {"Liste os medicamentos que devem ser tomados com alimentos ou em jejum, conforme as bulas.",
         "Quais remédios devem ser administrados junto com alimentos ou em jejum?"},
        {"Cite os medicamentos que possuem advertência ou contraindicação sobre uso de álcool segundo as bulas.",
         "Quais bulas advertem contra o consumo de bebidas alcoólicas durante o tratamento?"},
        {"Indique os medicamentos que não devem ser usados por gestantes, segundo as bulas.",
         "Quais medicamentos têm restrição de uso para gestantes nas bulas?"},
        {"Informe as doses recomendadas para adultos segundo as bulas dos medicamentos analisados.",
         "Liste as doses recomendadas para adultos de acordo com as bulas."},
    };
}

std::vector<EvalRow> run_eval(const std::vector<EvalQuestion>& questions, const AskFn& ask, const Embedder& embedder,
                              const EvalOptions& options) {
    std::vector<EvalRow> rows;
    rows.reserve(questions.size());
    if (!options.parallel) {
        for (const auto& q : questions) rows.push_back(run_one(q, ask, embedder));
        return rows;
    }
    std::vector<std::future<EvalRow>> pending;
    pending.reserve(questions.size());
    for (const auto& q : questions) {
        pending.push_back(std::async(std::launch::async, [&q, &ask, &embedder] { return run_one(q, ask, embedder); }));
    }
    for (auto& f : pending) rows.push_back(f.get());
    return rows;
}

double consistency_score(std::string_view answer, std::string_view answer_ref, const Embedder& embedder) {
    const auto vectors = embedder.embed({std::string(answer), std::string(answer_ref)});
    try {
        return round2(std::max(0.0, cosine_similarity(vectors[0], vectors[1])) * 100.0);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVector) throw;
        spdlog::warn("consistency: an answer has no embeddable words, scoring 0");
        return 0.0;
    }
}

double precision_mean(std::span<const int> labels) {
    if (labels.empty()) throw Error(ErrorCode::EmptyInput, "no precision labels");
    double sum = 0.0;
    for (const int l : labels) {
        if (l != 0 && l != 1) throw Error(ErrorCode::OutOfRange, "precision label " + std::to_string(l));
        sum += l;
    }
    return sum / static_cast<double>(labels.size());
}

double completeness_mean(std::span<const int> scores) {
    if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no completeness scores");
    double sum = 0.0;
    for (const int s : scores) {
        if (s < 1 || s > 5) throw Error(ErrorCode::OutOfRange, "completeness score " + std::to_string(s));
        sum += s;
    }
    return sum / static_cast<double>(scores.size());
}

double time_mean(std::span<const double> times) {
    if (times.empty()) throw Error(ErrorCode::EmptyInput, "no response times");
    double sum = 0.0;
    for (const double t : times) {
        if (t < 0.0) throw Error(ErrorCode::OutOfRange, "negative response time");
        sum += t;
    }
    return sum / static_cast<double>(times.size());
}

KappaResult cohen_kappa(std::span<const int> a1, std::span<const int> a2) {
    if (a1.size() != a2.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "rater lists of length " + std::to_string(a1.size()) + " and " + std::to_string(a2.size()));
    }
    if (a1.empty()) throw Error(ErrorCode::EmptyInput, "no ratings");
    std::map<int, std::pair<long long, long long>> marginals;
    long long agree = 0;
    for (std::size_t i = 0; i < a1.size(); ++i) {
        ++marginals[a1[i]].first;
        ++marginals[a2[i]].second;
        if (a1[i] == a2[i]) ++agree;
    }
    const auto n = static_cast<long long>(a1.size());
    long long chance = 0;  // sum of marginal products, = p_e * n^2
    for (const auto& [label, counts] : marginals) chance += counts.first * counts.second;
    const long long n2 = n * n;
    if (chance == n2) return {1.0, true};
    return {static_cast<double>(agree * n - chance) / static_cast<double>(n2 - chance), false};
}

std::string_view to_string(KappaBand band) {
    switch (band) {
        case KappaBand::Poor: return "poor";
        case KappaBand::Slight: return "slight";
        case KappaBand::Fair: return "fair";
        case KappaBand::Moderate: return "moderate";
        case KappaBand::Substantial: return "substantial";
        case KappaBand::AlmostPerfect: return "almost-perfect";
    }
    return "unknown";
}

KappaBand interpret_kappa(double k) {
    if (!(k >= -1.0 && k <= 1.0)) throw Error(ErrorCode::OutOfRange, "kappa outside [-1, 1]");
    if (k < 0.0) return KappaBand::Poor;
    if (k < 0.21) return KappaBand::Slight;
    if (k < 0.41) return KappaBand::Fair;
    if (k < 0.61) return KappaBand::Moderate;
    if (k <= 0.80) return KappaBand::Substantial;
    return KappaBand::AlmostPerfect;
}

bool MetricsSummary::all_pass() const {
    return std::all_of(threshold_report.begin(), threshold_report.end(),
                       [](const ThresholdCheck& c) { return c.pass.value_or(true); });
}

MetricsSummary summarize(const std::vector<EvalRow>& rows, bool include_time) {
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no rows to summarize");
    MetricsSummary s;
    s.rows = rows.size();
    s.precision_a1_mean = mean_of<int>(rows, [](const EvalRow& r) { return r.precision_a1; });
    s.precision_a2_mean = mean_of<int>(rows, [](const EvalRow& r) { return r.precision_a2; });
    s.completude_a1_mean = mean_of<int>(rows, [](const EvalRow& r) { return r.completude_a1; });
    s.completude_a2_mean = mean_of<int>(rows, [](const EvalRow& r) { return r.completude_a2; });
    if (include_time) {
        s.time_mean_s = mean_of<double>(rows, [](const EvalRow& r) { return std::optional<double>(r.time_s); });
        s.time_ref_mean_s = mean_of<double>(rows, [](const EvalRow& r) { return r.time_ref_s; });
    }
    s.consistency_mean_pct = mean_of<double>(rows, [](const EvalRow& r) { return r.consistency_pct; });

    std::vector<int> a1;
    std::vector<int> a2;
    for (const auto& r : rows) {
        if (r.precision_a1 && r.precision_a2) {
            a1.push_back(*r.precision_a1);
            a2.push_back(*r.precision_a2);
        }
    }
    if (!a1.empty()) {
        const auto k = cohen_kappa(a1, a2);
        s.kappa_precision = k.value;
        s.kappa_degenerate = k.degenerate;
        s.kappa_band = interpret_kappa(k.value);
    }

    s.threshold_report = {
        check("precision", ">= 0.85", average(s.precision_a1_mean, s.precision_a2_mean), true, kPrecisionTarget),
        check("completude", ">= 4.0", average(s.completude_a1_mean, s.completude_a2_mean), true, kCompletenessTarget),
        check("time_s", "<= 5", s.time_mean_s, false, kTimeTargetS),
        check("consistency_pct", ">= 80", s.consistency_mean_pct, true, kConsistencyTargetPct),
        check("kappa", ">= 0.61", s.kappa_precision, true, kKappaTarget),
    };
    return s;
}

std::string format_summary(const MetricsSummary& s) {
    auto cell = [](const std::optional<double>& v, int decimals) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.*f", decimals, *v);
        return std::string(buf);
    };
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %s\n", "rows", std::to_string(s.rows).c_str());
    out << line;
    const std::pair<const char*, std::string> values[] = {
        {"precision A1", cell(s.precision_a1_mean, 2)},
        {"precision A2", cell(s.precision_a2_mean, 2)},
        {"completude A1", cell(s.completude_a1_mean, 2)},
        {"completude A2", cell(s.completude_a2_mean, 2)},
        {"time mean (s)", cell(s.time_mean_s, 2)},
        {"time ref mean (s)", cell(s.time_ref_mean_s, 2)},
        {"consistency (%)", cell(s.consistency_mean_pct, 2)},
        {"kappa A1xA2", cell(s.kappa_precision, 2) + (s.kappa_band ? " (" + std::string(to_string(*s.kappa_band)) + ")" : "") +
                            (s.kappa_degenerate ? " [degenerate]" : "")},
    };
    for (const auto& [name, value] : values) {
        std::snprintf(line, sizeof(line), "%-22s %s\n", name, value.c_str());
        out << line;
    }
    out << "\nthresholds\n";
    for (const auto& c : s.threshold_report) {
        const char* verdict = !c.pass ? "n/a" : (*c.pass ? "PASS" : "FAIL");
        std::snprintf(line, sizeof(line), "%-22s %-10s %-10s %s\n", c.metric.c_str(), c.expected.c_str(),
                      cell(c.observed, 2).c_str(), verdict);
        out << line;
    }
    return out.str();
}

std::string summary_to_json(const MetricsSummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json thresholds = nlohmann::ordered_json::array();
    for (const auto& c : s.threshold_report) {
        thresholds.push_back({{"metric", c.metric},
                              {"expected", c.expected},
                              {"observed", opt(c.observed)},
                              {"pass", c.pass ? nlohmann::ordered_json(*c.pass) : nlohmann::ordered_json(nullptr)}});
    }
    const nlohmann::ordered_json j{
        {"rows", s.rows},
        {"precision_a1_mean", opt(s.precision_a1_mean)},
        {"precision_a2_mean", opt(s.precision_a2_mean)},
        {"completude_a1_mean", opt(s.completude_a1_mean)},
        {"completude_a2_mean", opt(s.completude_a2_mean)},
        {"time_mean_s", opt(s.time_mean_s)},
        {"time_ref_mean_s", opt(s.time_ref_mean_s)},
        {"consistency_mean_pct", opt(s.consistency_mean_pct)},
        {"kappa_precision", opt(s.kappa_precision)},
        {"kappa_degenerate", s.kappa_degenerate},
        {"kappa_band", s.kappa_band ? nlohmann::ordered_json(std::string(to_string(*s.kappa_band))) : nlohmann::ordered_json(nullptr)},
        {"threshold_report", thresholds},
    };
    return j.dump(2);
}

}  // namespace bularag
