#ifndef EULERFACTORY_MATCHING_HPP
#define EULERFACTORY_MATCHING_HPP

#include <eulerfactory/euler.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace eulerfactory {

// One paramodular Hecke eigenform record from the long-format CSV
// `label,conductor,p,a_p,b_p` (b_p optional per row).
struct ParamodularRecord {
    std::string label;
    long conductor = 0;
    std::map<long, mpz_class> a_p;
    std::map<long, mpz_class> b_p;
};

namespace detail {

// conductor is the third dot-field of labels like 2.K.61.3.0.a.a
inline long conductor_from_label(const std::string& label) {
    size_t pos = 0;
    int field = 0;
    for (size_t i = 0; i <= label.size(); ++i) {
        if (i == label.size() || label[i] == '.') {
            if (field == 2) {
                try {
                    return std::stol(label.substr(pos, i - pos));
                } catch (...) {
                    return -1;
                }
            }
            ++field;
            pos = i + 1;
        }
    }
    return -1;
}

}  // namespace detail

struct IngestReport {
    std::vector<ParamodularRecord> records;
    std::vector<std::string> warnings;
};

inline IngestReport ingest_database(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw input_error("cannot open eigenvalue database " + path);
    IngestReport rep;
    std::map<std::string, size_t> index;
    std::string line;
    bool header = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("label") != std::string::npos) continue;  // header row
        }
        std::istringstream ls(line);
        std::string label, cond_s, p_s, ap_s, bp_s;
        if (!std::getline(ls, label, ',') || !std::getline(ls, cond_s, ',') ||
            !std::getline(ls, p_s, ',') || !std::getline(ls, ap_s, ',')) {
            rep.warnings.push_back("line " + std::to_string(lineno) + ": malformed row skipped");
            continue;
        }
        std::getline(ls, bp_s, ',');
        long cond, p;
        mpz_class ap, bp;
        bool has_bp = !bp_s.empty();
        try {
            cond = std::stol(cond_s);
            p = std::stol(p_s);
            ap = mpz_class(ap_s);
            if (has_bp) bp = mpz_class(bp_s);
        } catch (...) {
            rep.warnings.push_back("line " + std::to_string(lineno) + ": non-integer field skipped");
            continue;
        }
        long label_cond = detail::conductor_from_label(label);
        if (label_cond > 0 && label_cond != cond) {
            rep.warnings.push_back("line " + std::to_string(lineno) + ": conductor mismatch (" +
                                   std::to_string(label_cond) + " in label vs " +
                                   std::to_string(cond) + ") skipped");
            continue;
        }
        auto it = index.find(label);
        if (it == index.end()) {
            index.emplace(label, rep.records.size());
            ParamodularRecord r;
            r.label = label;
            r.conductor = cond;
            rep.records.push_back(std::move(r));
            it = index.find(label);
        }
        rep.records[it->second].a_p[p] = ap;
        if (has_bp) rep.records[it->second].b_p[p] = bp;
    }
    if (rep.records.empty()) throw input_error("eigenvalue database has no valid rows");
    return rep;
}

enum class MatchPolicy { exact, exact_up_to_sign };

struct MatchCandidate {
    std::string label;
    long conductor = 0;
    int agree = 0;      // primes compared
    int sign = +1;      // +1 exact; -1 when matched as alpha_p = -a_p
    double collision_probability = 1.0;
};

// A record is a full match when alpha_p = a_p for every prime of the effective set
// (records may lack bad primes; those are excluded automatically).
inline std::vector<MatchCandidate> match_factors(const std::vector<EulerFactor>& factors,
                                                 const std::vector<ParamodularRecord>& records,
                                                 const std::vector<long>& prime_set,
                                                 MatchPolicy policy = MatchPolicy::exact) {
    std::map<long, mpz_class> alpha;
    for (auto& f : factors) alpha[f.p] = f.alpha;
    std::vector<MatchCandidate> out;
    for (const auto& rec : records) {
        int agree = 0;
        bool plus_ok = true, minus_ok = true;
        for (long p : prime_set) {
            auto fa = alpha.find(p);
            auto ra = rec.a_p.find(p);
            if (fa == alpha.end() || ra == rec.a_p.end()) continue;
            ++agree;
            if (fa->second != ra->second) plus_ok = false;
            if (fa->second != -ra->second) minus_ok = false;
            if (!plus_ok && (policy == MatchPolicy::exact || !minus_ok)) break;
        }
        if (agree == 0) continue;
        bool full = plus_ok || (policy == MatchPolicy::exact_up_to_sign && minus_ok);
        if (!full) continue;
        MatchCandidate c;
        c.label = rec.label;
        c.conductor = rec.conductor;
        c.agree = agree;
        c.sign = plus_ok ? +1 : -1;
        // crude informational estimate: records * prod_p 1/(8 p^{3/2}) over compared primes
        double logp = std::log(static_cast<double>(std::max<size_t>(records.size(), 1)));
        int used = 0;
        for (long p : prime_set) {
            if (alpha.count(p) == 0 || rec.a_p.count(p) == 0) continue;
            logp -= std::log(8.0 * std::pow(static_cast<double>(p), 1.5));
            if (++used >= agree) break;
        }
        c.collision_probability = std::exp(logp);
        out.push_back(std::move(c));
    }
    std::stable_sort(out.begin(), out.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
        return a.agree > b.agree;
    });
    return out;
}

inline std::vector<long> effective_prime_set(const std::vector<EulerFactor>& factors, long pmax) {
    std::vector<long> out;
    for (auto& f : factors)
        if (f.p <= pmax) out.push_back(f.p);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace eulerfactory

#endif
