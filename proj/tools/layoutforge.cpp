// Command-line front end: corpus ingestion, splitting, fine-tune export,
// layout generation (LLM and statistical baseline), evaluation, string
// labeling, few-shot classification, and SVG rendering.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layoutforge/classification.hpp"
#include "layoutforge/corpus.hpp"
#include "layoutforge/evaluation.hpp"
#include "layoutforge/generation.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/llm_client.hpp"
#include "layoutforge/promptcodec.hpp"
#include "layoutforge/report.hpp"

namespace lf = layoutforge;

namespace {

std::vector<lf::SectionLabel> parse_label_list(const std::string& csv) {
    std::vector<lf::SectionLabel> labels;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string item = lf::detail::trim(
            comma == std::string::npos ? csv.substr(start)
                                       : csv.substr(start, comma - start));
        if (!item.empty()) labels.push_back(lf::parse_label(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (labels.empty()) throw lf::EmptyLabelsError();
    return labels;
}

lf::TableFormat format_for(const std::string& path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".csv"
               ? lf::TableFormat::Csv
               : lf::TableFormat::Markdown;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw lf::Error("cannot write " + path);
    out << text;
}

// preds.jsonl -> preds.no_bbox.jsonl / preds.bbox.jsonl when one invocation
// runs both classification modes.
std::string with_mode_suffix(const std::string& path, const std::string& mode) {
    auto dot = path.rfind('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos) {
        return path + '.' + mode;
    }
    return path.substr(0, dot) + '.' + mode + path.substr(dot);
}

// The first record tells corpus files (doc_id) apart from string files (text).
bool looks_like_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lf::ParseError("cannot open file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (lf::detail::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw lf::ParseError("first record is not a JSON object: " + path);
        }
        if (j.contains("doc_id")) return true;
        if (j.contains("text")) return false;
        throw lf::ParseError("record is neither a document nor a string: " + path);
    }
    throw lf::EmptyCorpusError();
}

std::vector<lf::LayoutSample> ground_truth_layouts(const std::string& path) {
    std::vector<lf::LayoutSample> layouts;
    for (const auto& doc : lf::load_corpus(path).docs) {
        if (doc.sections.empty()) continue;
        layouts.push_back(lf::layout_of(doc));
    }
    return layouts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layoutforge: receipt layout corpora, generation and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 42;
    int timeout_seconds = 120;
    int parallelism = 4;
    app.add_option("--seed", seed, "RNG seed for splits, sampling and selection");
    app.add_option("--timeout", timeout_seconds, "LLM request timeout in seconds");
    app.add_option("--parallelism", parallelism, "max in-flight LLM requests")
        ->check(CLI::PositiveNumber);

    // --- ingest ---------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "convert an annotation export to corpus JSONL");
    std::string ingest_from = "label-studio";
    std::string ingest_file;
    std::string ingest_out;
    ingest->add_option("--from", ingest_from, "source format")
        ->check(CLI::IsMember({"label-studio"}));
    ingest->add_option("file", ingest_file, "annotation export file")->required();
    ingest->add_option("--out", ingest_out, "corpus JSONL output")->required();

    // --- split ----------------------------------------------------------
    auto* split_cmd = app.add_subcommand("split", "seeded train/test split of a JSONL file");
    std::string split_corpus, split_train, split_test;
    double split_fraction = 0.87;
    split_cmd->add_option("--corpus", split_corpus, "corpus or strings JSONL")->required();
    split_cmd->add_option("--fraction", split_fraction, "train fraction in (0,1)");
    split_cmd->add_option("--out-train", split_train, "train output")->required();
    split_cmd->add_option("--out-test", split_test, "test output")->required();

    // --- export-ft ------------------------------------------------------
    auto* export_ft = app.add_subcommand("export-ft", "export prompt/completion fine-tune records");
    std::string ft_train, ft_out, ft_manifest;
    export_ft->add_option("--train", ft_train, "train corpus JSONL")->required();
    export_ft->add_option("--out", ft_out, "fine-tune JSONL output")->required();
    export_ft->add_option("--manifest", ft_manifest, "recipe manifest output")->required();

    // --- generate -------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "conditional layout generation via LLM");
    std::string gen_labels, gen_out;
    std::size_t gen_n = 100;
    int gen_retries = 3;
    lf::LlmConfig gen_config;
    generate->add_option("--labels", gen_labels, "comma-separated section labels")->required();
    generate->add_option("--n", gen_n, "samples to generate")->check(CLI::PositiveNumber);
    generate->add_option("--retries", gen_retries, "re-asks per unparseable sample");
    generate->add_option("--base-url", gen_config.base_url, "chat-completions server");
    generate->add_option("--model", gen_config.model_name, "model name");
    generate->add_option("--temperature", gen_config.temperature, "sampling temperature");
    generate->add_option("--max-tokens", gen_config.max_tokens, "completion token cap");
    generate->add_option("--out", gen_out, "generation run JSONL output")->required();

    // --- baseline -------------------------------------------------------
    auto* baseline = app.add_subcommand("baseline", "statistical layout generator");
    baseline->require_subcommand(1);
    auto* baseline_fit = baseline->add_subcommand("fit", "fit per-label Gaussians");
    std::string bfit_train, bfit_out;
    baseline_fit->add_option("--train", bfit_train, "train corpus JSONL")->required();
    baseline_fit->add_option("--out", bfit_out, "model JSON output")->required();
    auto* baseline_sample = baseline->add_subcommand("sample", "sample layouts from a fitted model");
    std::string bs_model, bs_labels, bs_out;
    std::size_t bs_n = 100;
    baseline_sample->add_option("--model", bs_model, "model JSON")->required();
    baseline_sample->add_option("--labels", bs_labels, "comma-separated section labels")->required();
    baseline_sample->add_option("--n", bs_n, "samples to draw")->check(CLI::PositiveNumber);
    baseline_sample->add_option("--out", bs_out, "generation run JSONL output")->required();

    // --- evaluate -------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "compare generated layouts to ground truth");
    std::string eval_generated, eval_generated2, eval_gt, eval_out;
    std::string eval_name = "run1", eval_name2 = "run2";
    bool eval_pooled = false;
    evaluate->add_option("--generated", eval_generated, "generation run JSONL")->required();
    evaluate->add_option("--generated2", eval_generated2, "second run for side-by-side");
    evaluate->add_option("--ground-truth", eval_gt, "test corpus JSONL")->required();
    evaluate->add_option("--name", eval_name, "label for the first run");
    evaluate->add_option("--name2", eval_name2, "label for the second run");
    evaluate->add_flag("--pooled-covariance", eval_pooled,
                       "pool ground-truth and generated covariance");
    evaluate->add_option("--out", eval_out, "report output (.csv or .md)")->required();

    // --- label-strings ----------------------------------------------------
    auto* label_strings = app.add_subcommand("label-strings",
                                             "assign section labels to OCR strings");
    std::string ls_corpus, ls_out;
    label_strings->add_option("--corpus", ls_corpus, "corpus JSONL")->required();
    label_strings->add_option("--out", ls_out, "classified strings JSONL")->required();

    // --- classify ---------------------------------------------------------
    auto* classify = app.add_subcommand("classify", "few-shot string classification");
    std::string cl_train, cl_test, cl_out, cl_report;
    bool cl_with_bbox = false, cl_no_bbox = false;
    int cl_k = 2, cl_repeat = 3;
    std::size_t cl_batch = lf::kMaxClassificationBatch;
    lf::LlmConfig cl_config;
    cl_config.temperature = 0.0;  // stable answers; repeats still measure drift
    classify->add_option("--train", cl_train, "training strings JSONL")->required();
    classify->add_option("--test", cl_test, "test strings JSONL")->required();
    classify->add_flag("--with-bbox", cl_with_bbox, "append bounding boxes to strings");
    classify->add_flag("--no-bbox", cl_no_bbox, "plain text strings");
    classify->add_option("--k", cl_k, "few-shot examples per class")
        ->check(CLI::PositiveNumber);
    classify->add_option("--batch-size", cl_batch, "strings per prompt (max 60)")
        ->check(CLI::Range(std::size_t{1}, lf::kMaxClassificationBatch));
    classify->add_option("--repeat", cl_repeat, "repetitions for mean/std")
        ->check(CLI::PositiveNumber);
    classify->add_option("--base-url", cl_config.base_url, "chat-completions server");
    classify->add_option("--model", cl_config.model_name, "model name");
    classify->add_option("--temperature", cl_config.temperature, "sampling temperature");
    classify->add_option("--max-tokens", cl_config.max_tokens, "completion token cap");
    classify->add_option("--out", cl_out, "predictions JSONL output")->required();
    classify->add_option("--report", cl_report, "metrics table output (.csv or .md)");

    // --- render -----------------------------------------------------------
    auto* render = app.add_subcommand("render", "draw one generated layout as SVG");
    std::string rd_layout, rd_out;
    std::size_t rd_index = 0;
    lf::RenderStyle rd_style;
    render->add_option("--layout", rd_layout, "generation run JSONL")->required();
    render->add_option("--index", rd_index, "sample index (0-based)");
    render->add_option("--page-width", rd_style.page_width, "page width in output units");
    render->add_option("--page-height", rd_style.page_height, "page height in output units");
    render->add_option("--out", rd_out, "SVG output")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            auto set = lf::import_label_studio(ingest_file);
            lf::save_corpus(set, ingest_out);
            std::cout << "imported " << set.size() << " documents\n";
        } else if (*split_cmd) {
            if (looks_like_corpus(split_corpus)) {
                auto set = lf::load_corpus(split_corpus);
                auto [train, test] = lf::split(set, split_fraction, seed);
                lf::save_corpus(train, split_train);
                lf::save_corpus(test, split_test);
                std::cout << "split " << set.size() << " documents into "
                          << train.size() << " train / " << test.size() << " test\n";
            } else {
                auto strings = lf::load_strings(split_corpus);
                auto [train, test] = lf::split_strings(strings, split_fraction, seed);
                lf::save_strings(train, split_train);
                lf::save_strings(test, split_test);
                std::cout << "split " << train.size() + test.size()
                          << " labeled strings into " << train.size() << " train / "
                          << test.size() << " test\n";
            }
        } else if (*export_ft) {
            auto set = lf::load_corpus(ft_train);
            std::vector<std::string> warnings;
            std::size_t n = lf::export_finetune_corpus(set, lf::FineTuneRecipe{},
                                                       ft_out, ft_manifest, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "exported " << n << " fine-tune records\n";
        } else if (*generate) {
            gen_config.request_timeout_seconds = timeout_seconds;
            gen_config.parallelism = parallelism;
            auto run = lf::generate_llm(gen_config, parse_label_list(gen_labels),
                                        gen_n, gen_retries);
            lf::save_run(run, gen_out);
            std::cout << "generated " << run.ok_count() << " layouts, "
                      << run.failed_count() << " failed\n";
        } else if (*baseline_fit) {
            auto model = lf::fit_baseline(lf::load_corpus(bfit_train));
            lf::save_baseline(model, bfit_out);
            std::cout << "fitted baseline on " << model.total_boxes << " boxes\n";
        } else if (*baseline_sample) {
            auto model = lf::load_baseline(bs_model);
            auto run = lf::sample_baseline(model, parse_label_list(bs_labels), bs_n, seed);
            lf::save_run(run, bs_out);
            std::cout << "sampled " << run.samples.size() << " layouts\n";
        } else if (*evaluate) {
            auto gt = ground_truth_layouts(eval_gt);
            auto run = lf::load_run(eval_generated);
            auto report = lf::evaluate_layouts(run, gt, eval_pooled);
            std::string table;
            if (eval_generated2.empty()) {
                table = lf::layout_report_table(report, format_for(eval_out));
            } else {
                auto run2 = lf::load_run(eval_generated2);
                auto report2 = lf::evaluate_layouts(run2, gt, eval_pooled);
                table = lf::layout_report_table(report, report2, eval_name, eval_name2,
                                                format_for(eval_out));
                for (const auto& note : report2.notes) std::cerr << "note: " << note << '\n';
            }
            for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
            write_text(eval_out, table);
            std::cout << "wrote " << eval_out << '\n';
        } else if (*label_strings) {
            auto set = lf::load_corpus(ls_corpus);
            std::vector<lf::ClassifiedString> all;
            std::size_t undefined = 0;
            for (const auto& doc : set.docs) {
                for (auto& cs : lf::assign_sections(doc)) {
                    if (cs.true_label == lf::SectionLabel::Undefined) ++undefined;
                    all.push_back(std::move(cs));
                }
            }
            lf::save_strings(all, ls_out);
            std::cout << "labeled " << all.size() << " strings (" << undefined
                      << " undefined)\n";
        } else if (*classify) {
            cl_config.request_timeout_seconds = timeout_seconds;
            cl_config.parallelism = parallelism;
            auto train = lf::load_strings(cl_train);
            auto test = lf::load_strings(cl_test);
            auto fewshot = lf::select_fewshot(train, cl_k, seed);
            for (const auto& w : fewshot.warnings) std::cerr << "warning: " << w << '\n';

            // Neither flag = both modes, like the paired report columns.
            std::vector<bool> modes;
            if (cl_no_bbox || !cl_with_bbox) modes.push_back(false);
            if (cl_with_bbox || !cl_no_bbox) modes.push_back(true);

            std::optional<lf::AggregateMetrics> no_bbox_agg, with_bbox_agg;
            for (bool with_bbox : modes) {
                std::vector<lf::ClassifiedString> last_predictions;
                lf::AnomalyReport last_anomalies;
                auto agg = lf::repeat_and_aggregate(
                    [&] {
                        auto result = lf::run_classification(cl_config, fewshot, test,
                                                             with_bbox, cl_batch);
                        last_predictions = result.predictions;
                        last_anomalies = result.anomalies;
                        return lf::score(result.predictions);
                    },
                    cl_repeat);
                std::string out_path =
                    modes.size() == 1 ? cl_out
                                      : with_mode_suffix(cl_out, with_bbox ? "bbox"
                                                                           : "no_bbox");
                lf::save_strings(last_predictions, out_path);
                std::cout << (with_bbox ? "bbox" : "no-bbox") << ": accuracy "
                          << agg.accuracy.mean << " (" << last_anomalies.missed
                          << " missed, " << last_anomalies.invalid << " invalid, "
                          << last_anomalies.duplicate << " duplicate)\n";
                (with_bbox ? with_bbox_agg : no_bbox_agg) = agg;
            }
            if (!cl_report.empty()) {
                write_text(cl_report,
                           lf::classification_report_table(no_bbox_agg, with_bbox_agg,
                                                           cl_config.model_name,
                                                           format_for(cl_report)));
                std::cout << "wrote " << cl_report << '\n';
            }
        } else if (*render) {
            auto run = lf::load_run(rd_layout);
            if (rd_index >= run.samples.size()) {
                throw lf::Error("sample index " + std::to_string(rd_index) +
                                " out of range (run has " +
                                std::to_string(run.samples.size()) + " samples)");
            }
            if (run.samples[rd_index].failed) {
                throw lf::Error("sample " + std::to_string(rd_index) +
                                " failed generation; nothing to render");
            }
            write_text(rd_out, lf::render_svg(run.samples[rd_index].layout, rd_style));
            std::cout << "wrote " << rd_out << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
