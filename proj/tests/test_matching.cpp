#include <doctest.h>

#include <eulerfactory/matching.hpp>

#include <cstdio>
#include <fstream>

using namespace eulerfactory;

namespace {

const std::string kDataDir = EULERFACTORY_DATA_DIR;

std::vector<EulerFactor> factors61(long pmax) {
    std::vector<EulerFactor> out;
    for (auto& f : read_factor_lines(kDataDir + "/fixtures/cond61.factors"))
        if (f.p <= pmax) out.push_back(f);
    return out;
}

std::string write_tmp(const std::string& content) {
    std::string path = "/tmp/eulerfactory_match_test.csv";
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("ingest fixture CSV") {
    auto rep = ingest_database(kDataDir + "/fixtures/eigen61.csv");
    REQUIRE(rep.records.size() == 6);  // true record + 5 decoys
    const ParamodularRecord* true_rec = nullptr;
    for (auto& r : rep.records)
        if (r.label == "2.K.61.3.0.a.a") true_rec = &r;
    REQUIRE(true_rec != nullptr);
    CHECK(true_rec->conductor == 61);
    CHECK(true_rec->a_p.at(7) == 9);
    CHECK(true_rec->b_p.at(7) == 8);
}

TEST_CASE("ingest rejects empty and warns on malformed rows") {
    CHECK_THROWS_AS(ingest_database(write_tmp("label,conductor,p,a_p,b_p\n")), Error);
    auto rep = ingest_database(write_tmp("label,conductor,p,a_p,b_p\n"
                                         "2.K.61.3.0.a.a,61,2,7,12\n"
                                         "2.K.61.3.0.a.a,61,x,9,8\n"
                                         "2.K.59.3.0.a.a,61,2,7,12\n"));
    CHECK(rep.records.size() == 1);       // conductor-mismatch row and bad row skipped
    CHECK(rep.warnings.size() == 2);
    CHECK(rep.warnings[1].find("mismatch") != std::string::npos);
}

TEST_CASE("match: unique label against true record plus decoys") {
    auto rep = ingest_database(kDataDir + "/fixtures/eigen61.csv");
    auto fs = factors61(97);
    auto primes = effective_prime_set(fs, 97);
    auto got = match_factors(fs, rep.records, primes);
    REQUIRE(got.size() == 1);
    CHECK(got[0].label == "2.K.61.3.0.a.a");
    CHECK(got[0].agree == 24);
    CHECK(got[0].collision_probability < 1e-20);
}

TEST_CASE("match monotonicity: enlarging the prime set never adds candidates") {
    auto rep = ingest_database(kDataDir + "/fixtures/eigen61.csv");
    auto fs = factors61(97);
    auto small = match_factors(fs, rep.records, effective_prime_set(fs, 13));
    auto big = match_factors(fs, rep.records, effective_prime_set(fs, 97));
    for (auto& c : big) {
        bool found = false;
        for (auto& s : small)
            if (s.label == c.label) found = true;
        CHECK(found);
    }
    CHECK(big.size() <= small.size());
}

TEST_CASE("match policy: exact-up-to-global-sign finds negated records") {
    auto fs = factors61(31);
    ParamodularRecord neg;
    neg.label = "2.K.61.3.0.z.z";
    neg.conductor = 61;
    for (auto& f : fs) neg.a_p[f.p] = -f.alpha;
    auto primes = effective_prime_set(fs, 31);
    CHECK(match_factors(fs, {neg}, primes, MatchPolicy::exact).empty());
    auto got = match_factors(fs, {neg}, primes, MatchPolicy::exact_up_to_sign);
    REQUIRE(got.size() == 1);
    CHECK(got[0].sign == -1);
}

TEST_CASE("empty database and empty effective set") {
    auto fs = factors61(31);
    CHECK(match_factors(fs, {}, effective_prime_set(fs, 31)).empty());
    ParamodularRecord r;
    r.label = "x.y.3.z";
    r.conductor = 3;
    r.a_p[997] = 1;
    auto got = match_factors(fs, {r}, {997});
    CHECK(got.empty());  // no overlap -> no candidate
}
