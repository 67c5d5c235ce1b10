#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "layoutforge/generation.hpp"
#include "support/fixtures.hpp"
#include "support/mock_llm_server.hpp"

using namespace layoutforge;

namespace {

// One document per draw, each with a single Logo box from a known Gaussian
// with comfortably separated corners, so inversion rejection never triggers.
DocumentSet gaussian_logo_corpus(std::size_t n, std::uint64_t seed,
                                 const std::array<double, 4>& mean,
                                 const std::array<double, 4>& sigma) {
    std::mt19937_64 gen(seed);
    DocumentSet set;
    for (std::size_t i = 0; i < n; ++i) {
        Document doc;
        doc.doc_id = "g" + std::to_string(i);
        SectionAnnotation s;
        s.label = SectionLabel::Logo;
        s.bbox = BBox{mean[0] + sigma[0] * standard_normal(gen),
                      mean[1] + sigma[1] * standard_normal(gen),
                      mean[2] + sigma[2] * standard_normal(gen),
                      mean[3] + sigma[3] * standard_normal(gen)};
        doc.sections.push_back(s);
        set.docs.push_back(std::move(doc));
    }
    return set;
}

LlmConfig mock_config(const mock::LlmServer& server) {
    LlmConfig config;
    config.base_url = server.base_url();
    config.backoff_base_seconds = 0.001;
    config.request_timeout_seconds = 5;
    return config;
}

}  // namespace

TEST_CASE("fit_baseline rejects empty input") {
    CHECK_THROWS_AS(fit_baseline(DocumentSet{}), EmptyCorpusError);
    DocumentSet sectionless;
    sectionless.docs.push_back(Document{"empty", {}, {}});
    CHECK_THROWS_AS(fit_baseline(sectionless), EmptyCorpusError);
}

TEST_CASE("two identical boxes fit to that box with near-zero covariance") {
    DocumentSet set;
    Document doc;
    doc.doc_id = "d";
    doc.sections.push_back({SectionLabel::Logo, fixtures::box(10, 5, 40, 15)});
    doc.sections.push_back({SectionLabel::Logo, fixtures::box(10, 5, 40, 15)});
    set.docs.push_back(doc);

    BaselineModel model = fit_baseline(set);
    const auto& g = model.labels[label_index(SectionLabel::Logo)];
    CHECK(g.count == 2);
    CHECK_FALSE(g.degenerate);
    CHECK(g.mean == std::array<double, 4>{10, 5, 40, 15});
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) CHECK(std::abs(g.covariance[r][c]) < 1e-12);
    }

    // Zero spread reproduces the training box on every draw.
    auto run = sample_baseline(model, {SectionLabel::Logo}, 5, 7);
    for (const auto& sample : run.samples) {
        CHECK(sample.layout.entries[0].bbox == fixtures::box(10, 5, 40, 15));
    }
}

TEST_CASE("single-sample and absent labels are degenerate with fallbacks") {
    DocumentSet set;
    Document doc;
    doc.doc_id = "d";
    doc.sections.push_back({SectionLabel::Logo, fixtures::box(10, 5, 40, 15)});
    doc.sections.push_back({SectionLabel::Footer, fixtures::box(0, 90, 100, 100)});
    set.docs.push_back(doc);

    BaselineModel model = fit_baseline(set);
    CHECK(model.labels[label_index(SectionLabel::Logo)].degenerate);
    CHECK(model.labels[label_index(SectionLabel::Logo)].count == 1);
    // Absent label falls back to the global mean box.
    const auto& contact = model.labels[label_index(SectionLabel::Contact)];
    CHECK(contact.degenerate);
    CHECK(contact.count == 0);
    CHECK(contact.mean == model.global_mean);
    CHECK(model.global_mean == std::array<double, 4>{5, 47.5, 70, 57.5});

    auto run = sample_baseline(model, {SectionLabel::Contact}, 3, 11);
    for (const auto& sample : run.samples) {
        CHECK(sample.layout.entries[0].bbox ==
              BBox{model.global_mean[0], model.global_mean[1], model.global_mean[2],
                   model.global_mean[3]});
    }
}

TEST_CASE("fitted mean tracks the true Gaussian within 3 standard errors") {
    const std::array<double, 4> mean{12, 8, 88, 20};
    const std::array<double, 4> sigma{2, 1.5, 3, 2.5};
    DocumentSet set = gaussian_logo_corpus(500, 424242, mean, sigma);
    BaselineModel model = fit_baseline(set);
    const auto& g = model.labels[label_index(SectionLabel::Logo)];
    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(g.mean[k] - mean[k]) < 3.0 * sigma[k] / std::sqrt(500.0));
    }
}

TEST_CASE("baseline sampling is deterministic under seed and varies across seeds") {
    DocumentSet set = fixtures::synthetic_corpus(50, 1);
    BaselineModel model = fit_baseline(set);
    std::vector<SectionLabel> labels = {SectionLabel::Logo, SectionLabel::Footer,
                                        SectionLabel::Contact};

    auto run1 = sample_baseline(model, labels, 10, 99);
    auto run2 = sample_baseline(model, labels, 10, 99);
    auto run3 = sample_baseline(model, labels, 10, 100);

    REQUIRE(run1.samples.size() == 10);
    bool identical = true;
    bool differs = false;
    for (std::size_t s = 0; s < 10; ++s) {
        REQUIRE(run1.samples[s].labels == labels);
        for (std::size_t e = 0; e < labels.size(); ++e) {
            if (!(run1.samples[s].layout.entries[e].bbox ==
                  run2.samples[s].layout.entries[e].bbox)) {
                identical = false;
            }
            if (!(run1.samples[s].layout.entries[e].bbox ==
                  run3.samples[s].layout.entries[e].bbox)) {
                differs = true;
            }
        }
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("2000 draws of one label recover the model mean per coordinate") {
    const std::array<double, 4> mean{12, 8, 88, 20};
    const std::array<double, 4> sigma{2, 1.5, 3, 2.5};
    BaselineModel model = fit_baseline(gaussian_logo_corpus(400, 5150, mean, sigma));
    const auto& g = model.labels[label_index(SectionLabel::Logo)];

    auto run = sample_baseline(model, {SectionLabel::Logo}, 2000, 77);
    std::array<double, 4> sum{};
    for (const auto& sample : run.samples) {
        const BBox& b = sample.layout.entries[0].bbox;
        sum[0] += b.x1;
        sum[1] += b.y1;
        sum[2] += b.x2;
        sum[3] += b.y2;
    }
    for (int k = 0; k < 4; ++k) {
        const double drawn = sum[k] / 2000.0;
        const double model_sigma = std::sqrt(g.covariance[k][k]);
        CHECK(std::abs(drawn - g.mean[k]) < 3.0 * model_sigma / std::sqrt(2000.0));
    }
}

TEST_CASE("sampled boxes are always valid and labels match the request") {
    DocumentSet set = fixtures::synthetic_corpus(60, 9);
    BaselineModel model = fit_baseline(set);
    std::vector<SectionLabel> labels = {SectionLabel::Contact, SectionLabel::Contact,
                                        SectionLabel::LineItemTable};
    auto run = sample_baseline(model, labels, 200, 3);
    for (const auto& sample : run.samples) {
        REQUIRE(sample.labels == labels);
        REQUIRE_FALSE(sample.failed);
        REQUIRE(sample.layout.entries.size() == labels.size());
        for (std::size_t e = 0; e < labels.size(); ++e) {
            CHECK(sample.layout.entries[e].label == labels[e]);
            CHECK(sample.layout.entries[e].bbox.valid());
        }
    }
}

TEST_CASE("baseline model survives a save/load round-trip") {
    DocumentSet set = fixtures::synthetic_corpus(40, 23);
    BaselineModel model = fit_baseline(set);
    const std::string path =
        (std::filesystem::temp_directory_path() / "baseline_model.json").string();
    save_baseline(model, path);
    BaselineModel loaded = load_baseline(path);
    std::remove(path.c_str());

    for (SectionLabel label : kAllLabels) {
        const auto& a = model.labels[label_index(label)];
        const auto& b = loaded.labels[label_index(label)];
        CHECK(a.mean == b.mean);
        CHECK(a.covariance == b.covariance);
        CHECK(a.count == b.count);
        CHECK(a.degenerate == b.degenerate);
    }
    // Identical models draw identical samples.
    auto r1 = sample_baseline(model, {SectionLabel::Header}, 5, 1);
    auto r2 = sample_baseline(loaded, {SectionLabel::Header}, 5, 1);
    for (std::size_t s = 0; s < 5; ++s) {
        CHECK(r1.samples[s].layout.entries[0].bbox ==
              r2.samples[s].layout.entries[0].bbox);
    }
}

TEST_CASE("generate_llm replays the published answer into a valid sample") {
    mock::LlmServer server(
        [](const std::string&) { return std::string(fixtures::kExampleAnswer); });
    auto run = generate_llm(mock_config(server), fixtures::example_labels(), 1);
    REQUIRE(run.samples.size() == 1);
    REQUIRE_FALSE(run.samples[0].failed);
    CHECK(run.generator == "llm");
    CHECK(same_entries(run.samples[0].layout, fixtures::example_sample()));
    CHECK(run.ok_count() == 1);
    CHECK(run.failed_count() == 0);
}

TEST_CASE("garbage answers fail a sample after the retry budget") {
    mock::LlmServer server([](const std::string&) { return "i cannot help with that"; });
    auto run = generate_llm(mock_config(server), {SectionLabel::Logo}, 1, 2);
    REQUIRE(run.samples.size() == 1);
    CHECK(run.samples[0].failed);
    CHECK_FALSE(run.samples[0].error.empty());
    CHECK(run.failed_count() == 1);
    CHECK(server.request_count() == 3);  // first ask + 2 re-asks
}

TEST_CASE("a sample that fails once is retried and recovers") {
    std::atomic<int> calls{0};
    mock::LlmServer server([&](const std::string&) {
        return ++calls == 1 ? std::string("nonsense")
                            : std::string("Logo: 1, 2, 3, 4");
    });
    auto run = generate_llm(mock_config(server), {SectionLabel::Logo}, 1, 3);
    REQUIRE_FALSE(run.samples[0].failed);
    CHECK(run.samples[0].layout.entries[0].bbox == BBox{1, 2, 3, 4});
    CHECK(server.request_count() == 2);
}

TEST_CASE("generate_llm keeps sample slots in order") {
    std::atomic<int> calls{0};
    mock::LlmServer server([&](const std::string&) {
        const int n = calls++;
        return "Logo: " + std::to_string(n) + ", 0, " + std::to_string(n + 1) + ", 1";
    });
    LlmConfig config = mock_config(server);
    config.parallelism = 1;  // deterministic response assignment
    auto run = generate_llm(config, {SectionLabel::Logo}, 3);
    REQUIRE(run.samples.size() == 3);
    for (int s = 0; s < 3; ++s) {
        REQUIRE_FALSE(run.samples[s].failed);
        CHECK(run.samples[s].layout.entries[0].bbox.x1 == static_cast<double>(s));
    }
}

TEST_CASE("validate_layout flags nothing on the published example") {
    CHECK(validate_layout(fixtures::example_sample()).empty());
}

TEST_CASE("validate_layout reports defects") {
    LayoutSample sample;
    LayoutEntry contact1{SectionLabel::Contact, BBox{0, 0, 10, 10}};
    LayoutEntry contact2{SectionLabel::Contact, BBox{5, 5, 15, 15}};
    LayoutEntry zero{SectionLabel::Logo, BBox{3, 3, 3, 8}};
    sample.entries = {contact1, contact2, zero};

    auto issues = validate_layout(sample);
    REQUIRE(issues.size() == 2);
    CHECK(issues[0].kind == LayoutIssue::Kind::ZeroArea);
    CHECK(issues[1].kind == LayoutIssue::Kind::IntraLabelOverlap);
    CHECK(issues[1].entry == 0);
    CHECK(issues[1].other_entry == 1);

    LayoutSample bad;
    bad.entries = {LayoutEntry{SectionLabel::Footer, BBox{-2, 0, 120, 50}},
                   LayoutEntry{SectionLabel::Logo, BBox{10, 10, 5, 20}}};
    auto bad_issues = validate_layout(bad);
    REQUIRE(bad_issues.size() == 2);
    CHECK(bad_issues[0].kind == LayoutIssue::Kind::OutOfRange);
    CHECK(bad_issues[1].kind == LayoutIssue::Kind::InvertedCorners);
}

TEST_CASE("generation runs persist as JSON lines with the documented keys") {
    mock::LlmServer server(
        [](const std::string&) { return std::string(fixtures::kExampleAnswer); });
    auto run = generate_llm(mock_config(server), fixtures::example_labels(), 2);
    run.samples[1].failed = true;
    run.samples[1].error = "forced for the test";
    run.samples[1].layout.entries.clear();

    const std::string path =
        (std::filesystem::temp_directory_path() / "run_roundtrip.jsonl").string();
    save_run(run, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    auto j = nlohmann::json::parse(line);
    REQUIRE(j.is_object());
    CHECK(j.size() == 4);
    CHECK(j.contains("labels"));
    CHECK(j.contains("entries"));
    CHECK(j.contains("status"));
    CHECK(j.contains("repairs"));
    CHECK(j["status"] == "ok");
    CHECK(j["labels"][0] == "Logo");
    CHECK(j["entries"][0]["label"] == "Logo");
    CHECK(j["entries"][0]["bbox"][0] == 40.0);

    GenerationRun loaded = load_run(path, "llm");
    std::remove(path.c_str());
    REQUIRE(loaded.samples.size() == 2);
    CHECK(loaded.generator == "llm");
    CHECK_FALSE(loaded.samples[0].failed);
    CHECK(loaded.samples[1].failed);
    CHECK(same_entries(loaded.samples[0].layout, run.samples[0].layout));
    CHECK(loaded.samples[0].labels == run.samples[0].labels);
}

TEST_CASE("loading a malformed run file reports the record") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "run_bad.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"labels": ["Logo"], "entries": [], "status": "maybe", "repairs": []})"
            << '\n';
    }
    CHECK_THROWS_AS(load_run(path), ParseError);
    {
        std::ofstream out(path);
        out << R"({"entries": [], "status": "ok", "repairs": []})" << '\n';
    }
    CHECK_THROWS_AS(load_run(path), ParseError);
    std::remove(path.c_str());
}
