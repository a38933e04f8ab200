#pragma once
// Reference implementations used only by tests. Written directly from the
// definitions, without reusing library code, so that they can disagree.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Neighbor {
    std::int64_t id;
    double dist;
};

// Full scan, full sort.
inline std::vector<Neighbor> brute_force_knn(const std::vector<std::vector<float>>& rows, const std::vector<float>& q,
                                             std::size_t k) {
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        long double d = 0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const long double diff = static_cast<long double>(rows[i][j]) - static_cast<long double>(q[j]);
            d += diff * diff;
        }
        all.push_back({static_cast<std::int64_t>(i), static_cast<double>(d)});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

// Two-rater kappa from an explicit confusion matrix.
inline double confusion_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    std::set<int> labels(a.begin(), a.end());
    labels.insert(b.begin(), b.end());
    const std::vector<int> cats(labels.begin(), labels.end());
    const std::size_t m = cats.size();
    std::vector<std::vector<double>> table(m, std::vector<double>(m, 0.0));
    auto index_of = [&](int v) { return static_cast<std::size_t>(std::find(cats.begin(), cats.end(), v) - cats.begin()); };
    for (std::size_t i = 0; i < a.size(); ++i) table[index_of(a[i])][index_of(b[i])] += 1.0;
    const double n = static_cast<double>(a.size());
    double diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) diag += table[i][i];
    double pe = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row += table[c][j];
            col += table[j][c];
        }
        pe += (row / n) * (col / n);
    }
    const double po = diag / n;
    if (pe == 1.0) return 1.0;
    return (po - pe) / (1.0 - pe);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Hashed bag of words for ASCII input only.
inline std::vector<double> hashed_bow_ascii(const std::string& text, std::size_t dim) {
    std::string cleaned;
    for (const unsigned char c : text) cleaned += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ';
    std::vector<double> v(dim, 0.0);
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
        const auto h = fnv1a(tok);
        v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    double n = 0.0;
    for (const double x : v) n += x * x;
    if (n > 0) {
        n = std::sqrt(n);
        for (double& x : v) x /= n;
    }
    return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
}

inline std::size_t whitespace_tokens(const std::string& s) {
    std::istringstream in(s);
    std::string t;
    std::size_t n = 0;
    while (in >> t) ++n;
    return n;
}

inline std::vector<std::string> whitespace_split(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

// Lowercase + drop Portuguese accents via a literal table.
inline std::string fold_pt(std::string s) {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"á", "a"}, {"à", "a"}, {"â", "a"}, {"ã", "a"}, {"é", "e"}, {"ê", "e"}, {"í", "i"}, {"ó", "o"},
        {"ô", "o"}, {"õ", "o"}, {"ú", "u"}, {"ü", "u"}, {"ç", "c"}, {"Á", "a"}, {"À", "a"}, {"Â", "a"},
        {"Ã", "a"}, {"É", "e"}, {"Ê", "e"}, {"Í", "i"}, {"Ó", "o"}, {"Ô", "o"}, {"Õ", "o"}, {"Ú", "u"},
        {"Ç", "c"}};
    for (const auto& [from, to] : table) {
        for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;) s.replace(pos, from.size(), to);
    }
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::set<std::string> folded_word_set(const std::string& s) {
    std::string f = fold_pt(s);
    for (char& c : f) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
    }
    const auto w = whitespace_split(f);
    return {w.begin(), w.end()};
}

// Keyword channel by naive scan: (id, score) sorted score desc, id asc.
inline std::vector<std::pair<std::int64_t, int>> keyword_scan(const std::string& query,
                                                              const std::vector<std::string>& passages,
                                                              const std::set<std::string>& stop) {
    std::vector<std::string> terms;
    std::string f = fold_pt(query);
    for (char& c : f) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
    }
    for (const auto& t : whitespace_split(f)) {
        if (!stop.count(t) && std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(t);
    }
    std::vector<std::pair<std::int64_t, int>> out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const auto vocab = folded_word_set(passages[i]);
        int score = 0;
        for (const auto& t : terms) score += vocab.count(t) ? 1 : 0;
        if (score > 0) out.emplace_back(static_cast<std::int64_t>(i), score);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

}  // namespace oracle
