#include <doctest.h>

#include <fstream>
#include <set>

#include "chordlab/errors.hpp"
#include "chordlab/runstore.hpp"
#include "tmpdir.hpp"

using namespace chordlab;
using namespace chordlab::testing;

TEST_SUITE_BEGIN("runstore");

namespace {

RunRecord sample_record(const std::string& kind, double acc) {
    RunRecord r;
    r.run_id = new_ulid();
    r.kind = kind;
    r.dataset = "toy";
    r.seed = 42;
    r.k = 3;
    r.lr = 1e-3;
    r.batch = 32;
    r.max_epochs = 10;
    r.patience = 3;
    r.clip_norm = 1.0;
    for (int i = 0; i < 3; ++i) {
        FoldMetrics f;
        f.fold = i;
        f.metrics.accuracy = acc + 0.01 * i;
        f.metrics.perplexity = 4.0 - 0.1 * i;
        f.metrics.similarity = 0.9;
        f.metrics.n = 100;
        r.folds.push_back(f);
    }
    aggregate_folds(r);
    return r;
}

}  // namespace

TEST_CASE("ulid format and uniqueness") {
    std::set<std::string> seen;
    const std::string alphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
    for (int i = 0; i < 200; ++i) {
        const std::string id = new_ulid();
        REQUIRE(id.size() == 26);
        for (char c : id) CHECK(alphabet.find(c) != std::string::npos);
        CHECK(seen.insert(id).second);
    }
}

TEST_CASE("aggregate computes the exact fold mean") {
    RunRecord r = sample_record("markov", 0.5);
    CHECK(r.mean.accuracy == doctest::Approx((0.5 + 0.51 + 0.52) / 3).epsilon(1e-12));
    CHECK(r.stddev.accuracy > 0);
    CHECK(r.mean.n == 300);
}

TEST_CASE("write-then-read round trip") {
    TmpDir tmp;
    const std::string store = tmp.file("runs.jsonl");
    const RunRecord a = sample_record("markov", 0.4);
    const RunRecord b = sample_record("vom", 0.6);
    record_run(a, store);
    record_run(b, store);

    const auto all = list_runs(store);
    REQUIRE(all.size() == 2);
    CHECK(all[0].run_id == a.run_id);
    CHECK(all[0].kind == "markov");
    CHECK(all[0].mean.accuracy == a.mean.accuracy);
    CHECK(all[0].folds.size() == 3);
    CHECK(all[1].run_id == b.run_id);
    CHECK(all[1].hp.max_order == b.hp.max_order);
}

TEST_CASE("filters by kind and dataset") {
    TmpDir tmp;
    const std::string store = tmp.file("runs.jsonl");
    record_run(sample_record("markov", 0.4), store);
    record_run(sample_record("vom", 0.5), store);
    RunRecord other = sample_record("vom", 0.7);
    other.dataset = "big";
    record_run(other, store);

    CHECK(list_runs(store, {.kind = "vom", .dataset = ""}).size() == 2);
    CHECK(list_runs(store, {.kind = "markov", .dataset = ""}).size() == 1);
    CHECK(list_runs(store, {.kind = "vom", .dataset = "big"}).size() == 1);
    CHECK(list_runs(store, {.kind = "lstm", .dataset = ""}).empty());
}

TEST_CASE("a corrupt line reports its number") {
    TmpDir tmp;
    const std::string store = tmp.file("runs.jsonl");
    record_run(sample_record("markov", 0.4), store);
    {
        std::ofstream out(store, std::ios::app);
        out << "{not json\n";
    }
    record_run(sample_record("vom", 0.5), store);
    CHECK_THROWS_AS(list_runs(store), StoreCorrupt);
    try {
        list_runs(store);
    } catch (const StoreCorrupt& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("missing store lists as empty") {
    TmpDir tmp;
    CHECK(list_runs(tmp.file("absent.jsonl")).empty());
}

TEST_SUITE_END();
