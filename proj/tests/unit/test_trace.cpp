#include "doctest.h"
#include "fixtures.hpp"

#include "mofs/error.hpp"
#include "mofs/trace.hpp"

using namespace mofs;

namespace {

SearchSpace space3() {
    return SearchSpace({ParamDef::integer("k", 1, 50), ParamDef::numeric("distance", 1.0, 100.0),
                        ParamDef::categorical("kernel", {"rectangular", "optimal"})});
}

TraceRecord sample_record(std::size_t i) {
    TraceRecord r;
    r.eval_index = i;
    r.generation = i / 3;
    r.config.hyperparams = {static_cast<double>(i + 1), 2.5 + i, static_cast<double>(i % 2)};
    r.config.mask = FeatureMask::from_string("0110");
    r.config.strategy = StrategyParams{{0.1, 0.2}, 0.25, 0.3};
    r.mask = *r.config.mask;
    r.objectives = {0.125 * static_cast<double>(i % 8), 0.5};
    r.wall_time = 0.5 * static_cast<double>(i);
    return r;
}

}  // namespace

TEST_CASE("configuration JSON") {
    const auto space = space3();
    Configuration c;
    c.hyperparams = {7, 3.25, 1};
    c.ffrac = 0.4;
    c.weights = std::vector<double>{0.25, 0.75};
    c.filter_index = 1;
    const auto j = config_to_json(space, c);
    CHECK(j["hyperparams"]["k"] == 7);
    CHECK(j["hyperparams"]["kernel"] == "optimal");
    CHECK(config_from_json(space, j) == c);

    auto bad = j;
    bad["hyperparams"]["kernel"] = "cosine";
    CHECK_THROWS_AS(config_from_json(space, bad), Error);
    bad = j;
    bad["hyperparams"].erase("k");
    CHECK_THROWS_AS(config_from_json(space, bad), Error);
}

TEST_CASE("trace JSONL round trip") {
    const auto space = space3();
    fixture::TempDir dir("trace");
    Trace t;
    for (std::size_t i = 0; i < 7; ++i) t.records.push_back(sample_record(i));
    t.records[3].failed = true;
    write_trace_jsonl(dir / "t.jsonl", space, t);
    const auto back = read_trace_jsonl(dir / "t.jsonl", space);
    REQUIRE(back.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(back[i].eval_index == t.records[i].eval_index);
        CHECK(back[i].generation == t.records[i].generation);
        CHECK(back[i].config == t.records[i].config);
        CHECK(back[i].mask == t.records[i].mask);
        CHECK(back[i].objectives == t.records[i].objectives);
        CHECK(back[i].wall_time == t.records[i].wall_time);
        CHECK(back[i].failed == t.records[i].failed);
    }
    CHECK(!record_to_json(space, t.records[0], false).contains("wall_time"));

    SUBCASE("malformed lines name the file and line") {
        fixture::write_file(dir / "bad.jsonl", record_to_json(space, t.records[0]).dump() + "\n{\"eval_index\": 1}\n");
        try {
            read_trace_jsonl(dir / "bad.jsonl", space);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::parse);
            CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
        }
        CHECK_THROWS_AS(read_trace_jsonl(dir / "missing.jsonl", space), Error);
    }
}
