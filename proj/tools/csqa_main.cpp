// csqa: five-way multiple-choice QA pipeline.
//
// validate -> train (N seeds) -> score -> ensemble -> evaluate -> predict
// -> report, all as separate re-runnable commands over plain text files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csqa/data.hpp"
#include "csqa/ensemble.hpp"
#include "csqa/errors.hpp"
#include "csqa/prompt.hpp"
#include "csqa/scorer.hpp"
#include "csqa/text.hpp"
#include "csqa/train.hpp"

namespace fs = std::filesystem;
using namespace csqa;

namespace {

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<uint64_t> seeds;
    for (std::string_view field : split(csv, ',')) {
        std::string s(trim(field));
        if (s.empty()) continue;
        try {
            seeds.push_back(std::stoull(s));
        } catch (const std::logic_error&) {
            throw ParseError("bad seed '" + s + "' in --seeds");
        }
    }
    if (seeds.empty()) throw ParseError("--seeds produced no seeds");
    return seeds;
}

// Run artifacts land under $CSQA_RUN_ROOT when --out is relative.
fs::path resolve_run_dir(const fs::path& out) {
    if (out.is_absolute()) return out;
    if (const char* root = std::getenv("CSQA_RUN_ROOT")) return fs::path(root) / out;
    return out;
}

struct ValidateArgs {
    std::string train_path, dev_path, test_path;
    size_t expect_train = kOfficialTrainCount;
    size_t expect_dev = kOfficialDevCount;
    size_t expect_test = kOfficialTestCount;
};

int cmd_validate(const ValidateArgs& args) {
    if (args.train_path.empty() && args.dev_path.empty() && args.test_path.empty())
        throw ParseError("validate: no data files given; pass --train, --dev, and/or --test");

    bool all_pass = true;
    auto check = [&](const std::string& path, SplitName name, size_t expected) {
        if (path.empty()) return;
        DatasetSplit split = load_split(path, name);
        CountReport report = validate_counts(split, expected);
        std::cout << to_string(report) << '\n';
        all_pass = all_pass && report.pass;
    };
    check(args.train_path, SplitName::Train, args.expect_train);
    check(args.dev_path, SplitName::Dev, args.expect_dev);
    check(args.test_path, SplitName::Test, args.expect_test);
    return all_pass ? 0 : 1;
}

struct TrainArgs {
    std::string train_path, dev_path, test_path;
    std::string config_path;
    std::string seeds_csv = "1,2,3,4,5";
    std::string out_dir;
    std::string separator;
    std::string schedule;
};

int cmd_train(const TrainArgs& args) {
    TrainConfig config;
    if (!args.config_path.empty()) config = load_train_config(args.config_path);
    if (!args.separator.empty()) config.prompt.separator = args.separator;
    if (!args.schedule.empty()) config.schedule_mode = schedule_mode_from_string(args.schedule);
    validate_config(config);

    const std::vector<uint64_t> seeds = parse_seed_list(args.seeds_csv);
    const DatasetSplit train_split = load_split(args.train_path, SplitName::Train);
    const DatasetSplit dev_split = load_split(args.dev_path, SplitName::Dev);
    std::optional<DatasetSplit> test_split;
    if (!args.test_path.empty()) test_split = load_split(args.test_path, SplitName::Test);

    const fs::path out = resolve_run_dir(args.out_dir);
    fs::create_directories(out / "scores");
    save_train_config(config, out / "config.kv");

    const TinyScorerOptions scorer_options;
    std::vector<SeedRun> runs =
        run_seeds(config, seeds, train_split, dev_split, test_split ? &*test_split : nullptr, scorer_options);

    for (const SeedRun& run : runs) {
        const fs::path run_dir = out / "runs" / std::to_string(run.seed);
        for (const Checkpoint& ck : run.result.epochs) {
            const fs::path epoch_dir = run_dir / ("epoch" + std::to_string(ck.meta.epoch));
            fs::create_directories(epoch_dir);
            ReferenceTinyScorer snapshot(run.seed, scorer_options);
            auto params = snapshot.parameters();
            std::copy(ck.parameters.begin(), ck.parameters.end(), params.begin());
            snapshot.save_snapshot(epoch_dir / "params.tsv");
            save_checkpoint_meta(ck.meta, epoch_dir / "meta.kv");
        }
        save_history(run.result.history, run_dir / "history.tsv");
        save_checkpoint_meta(run.result.best.meta, run_dir / "best.kv");

        save_matrix(run.dev_scores, out / "scores" / ("dev.seed" + std::to_string(run.seed) + ".tsv"));
        if (run.test_scores)
            save_matrix(*run.test_scores, out / "scores" / ("test.seed" + std::to_string(run.seed) + ".tsv"));

        std::cout << "seed " << run.seed << ": best epoch " << run.result.best.meta.epoch << ", dev accuracy "
                  << format_g17(run.result.best.meta.dev_accuracy) << '\n';
    }
    std::cout << "wrote artifacts to " << out.string() << '\n';
    return 0;
}

struct ScoreArgs {
    std::string checkpoint_dir;
    std::string data_path;
    std::string split_name = "dev";
    std::string out_path;
    std::string separator;
};

int cmd_score(const ScoreArgs& args) {
    ReferenceTinyScorer scorer = ReferenceTinyScorer::load_snapshot(fs::path(args.checkpoint_dir) / "params.tsv");
    const SplitName name = split_name_from_string(args.split_name);
    const DatasetSplit split = load_split(args.data_path, name);
    PromptOptions options;
    if (!args.separator.empty()) options.separator = args.separator;

    ScoreMatrix m = score_split(scorer, split, options, scorer.id() + "/seed" + std::to_string(scorer.seed()));
    m.meta["seed"] = std::to_string(scorer.seed());
    m.meta["checkpoint"] = fs::path(args.checkpoint_dir).filename().string();
    save_matrix(m, args.out_path);
    std::cout << "scored " << split.records.size() << " questions -> " << args.out_path << '\n';
    return 0;
}

struct EnsembleArgs {
    std::vector<std::string> matrix_paths;
    std::string out_path;
    std::string mode = "logits";
};

int cmd_ensemble(const EnsembleArgs& args) {
    std::vector<ScoreMatrix> matrices;
    matrices.reserve(args.matrix_paths.size());
    for (const std::string& p : args.matrix_paths) matrices.push_back(load_matrix(p));
    ScoreMatrix avg = average_scores(matrices, average_mode_from_string(args.mode));
    save_matrix(avg, args.out_path);
    std::cout << "averaged " << matrices.size() << " matrices -> " << args.out_path << '\n';
    return 0;
}

struct EvaluateArgs {
    std::string matrix_path;
    std::string gold_path;
    std::string gold_name = "dev";
    std::string method;
    std::string kind;
    std::string result_path;
};

int cmd_evaluate(const EvaluateArgs& args) {
    const ScoreMatrix matrix = load_matrix(args.matrix_path);
    const DatasetSplit gold = load_split(args.gold_path, split_name_from_string(args.gold_name));
    EvalReport report = accuracy(predict(matrix), gold);

    std::string method = args.method.empty() ? matrix.model_id : args.method;
    std::string kind = args.kind;
    if (kind.empty()) kind = matrix.meta.count("models") ? "ensemble" : "single";
    if (kind != "single" && kind != "ensemble")
        throw ParseError("evaluate: --kind must be single or ensemble");

    const long long correct = std::llround(report.accuracy * static_cast<double>(report.n_questions));
    std::cout << report.split << " accuracy: " << format_g17(report.accuracy) << " (" << correct << "/"
              << report.n_questions << ")\n";

    if (!args.result_path.empty()) {
        std::ofstream out(args.result_path);
        if (!out) throw SemanticError("cannot write result file: " + args.result_path);
        out << "method = " << method << '\n';
        out << "kind = " << kind << '\n';
        out << "split = " << report.split << '\n';
        out << "accuracy = " << format_g17(report.accuracy) << '\n';
        out << "n = " << report.n_questions << '\n';
    }
    return 0;
}

struct PredictArgs {
    std::string matrix_path;
    std::string out_path;
};

int cmd_predict(const PredictArgs& args) {
    const ScoreMatrix matrix = load_matrix(args.matrix_path);
    export_predictions(predict(matrix), args.out_path);
    std::cout << "wrote " << matrix.question_ids.size() << " predictions -> " << args.out_path << '\n';
    return 0;
}

struct ReportArgs {
    std::vector<std::string> result_paths;
    std::string out_path;
};

EvalReport load_result_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open result file: " + path.string());
    std::string method, kind, split;
    double acc = 0.0;
    size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        size_t eq = sv.find('=');
        if (eq == std::string_view::npos) throw ParseError(path.string() + ": expected key = value");
        std::string key(trim(sv.substr(0, eq)));
        std::string value(trim(sv.substr(eq + 1)));
        try {
            if (key == "method") method = value;
            else if (key == "kind") kind = value;
            else if (key == "split") split = value;
            else if (key == "accuracy") acc = std::stod(value);
            else if (key == "n") n = std::stoull(value);
            else throw ParseError(path.string() + ": unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ": bad value for '" + key + "'");
        }
    }
    if (method.empty() || (kind != "single" && kind != "ensemble"))
        throw ParseError(path.string() + ": result file needs method and kind=single|ensemble");

    EvalReport report;
    report.split = split;
    report.accuracy = acc;
    report.n_questions = n;
    ReportRow row;
    row.method = method;
    if (kind == "single") row.single = acc;
    else row.ensemble = acc;
    report.rows.push_back(row);
    return report;
}

int cmd_report(const ReportArgs& args) {
    std::vector<EvalReport> reports;
    reports.reserve(args.result_paths.size());
    for (const std::string& p : args.result_paths) reports.push_back(load_result_file(p));
    const std::string table = render_report(reports);
    std::cout << table;
    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path);
        if (!out) throw SemanticError("cannot write report: " + args.out_path);
        out << table;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"five-way multiple-choice QA: prompt, score, train, ensemble, evaluate"};
    app.require_subcommand(1);

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "check data files against the expected record contract");
    validate->add_option("--train", validate_args.train_path, "train split file");
    validate->add_option("--dev", validate_args.dev_path, "dev split file");
    validate->add_option("--test", validate_args.test_path, "test split file");
    validate->add_option("--expect-train", validate_args.expect_train, "expected train count (default 9741)");
    validate->add_option("--expect-dev", validate_args.expect_dev, "expected dev count (default 1221)");
    validate->add_option("--expect-test", validate_args.expect_test, "expected test count (default 1140)");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train one model per seed and score dev/test");
    train_cmd->add_option("--train", train_args.train_path, "train split file")->required();
    train_cmd->add_option("--dev", train_args.dev_path, "dev split file")->required();
    train_cmd->add_option("--test", train_args.test_path, "test split file");
    train_cmd->add_option("--config", train_args.config_path, "key=value config file");
    train_cmd->add_option("--seeds", train_args.seeds_csv, "comma-separated seeds (default 1,2,3,4,5)");
    train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();
    train_cmd->add_option("--separator", train_args.separator, "prompt separator literal");
    train_cmd->add_option("--schedule", train_args.schedule, "stepwise or linear");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "score a split with a saved checkpoint");
    score->add_option("--checkpoint", score_args.checkpoint_dir, "checkpoint directory (contains params.tsv)")
        ->required();
    score->add_option("--data", score_args.data_path, "split file to score")->required();
    score->add_option("--name", score_args.split_name, "split name: train, dev, or test (default dev)");
    score->add_option("--out", score_args.out_path, "output score matrix")->required();
    score->add_option("--separator", score_args.separator, "prompt separator literal");

    EnsembleArgs ensemble_args;
    auto* ensemble = app.add_subcommand("ensemble", "average score matrices across models");
    ensemble->add_option("-m,--matrix", ensemble_args.matrix_paths, "score matrix file (repeatable)")
        ->required()
        ->expected(-1);
    ensemble->add_option("--out", ensemble_args.out_path, "output score matrix")->required();
    ensemble->add_option("--ensemble-mode", ensemble_args.mode, "logits or probs (default logits)");

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "accuracy of a score matrix against gold labels");
    evaluate->add_option("--matrix", evaluate_args.matrix_path, "score matrix file")->required();
    evaluate->add_option("--gold", evaluate_args.gold_path, "gold split file")->required();
    evaluate->add_option("--gold-name", evaluate_args.gold_name, "gold split name (default dev)");
    evaluate->add_option("--method", evaluate_args.method, "method name for reports");
    evaluate->add_option("--kind", evaluate_args.kind, "single or ensemble (default: inferred)");
    evaluate->add_option("--result", evaluate_args.result_path, "write a result file for csqa report");

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "export question_id,label predictions");
    predict_cmd->add_option("--matrix", predict_args.matrix_path, "score matrix file")->required();
    predict_cmd->add_option("--out", predict_args.out_path, "output prediction file")->required();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "render a Method/Single/Ensemble table from result files");
    report->add_option("-r,--result", report_args.result_paths, "result file (repeatable)")
        ->required()
        ->expected(-1);
    report->add_option("--out", report_args.out_path, "also write the table to this file");

    try {
        app.parse(argc, argv);
        if (validate->parsed()) return cmd_validate(validate_args);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (score->parsed()) return cmd_score(score_args);
        if (ensemble->parsed()) return cmd_ensemble(ensemble_args);
        if (evaluate->parsed()) return cmd_evaluate(evaluate_args);
        if (predict_cmd->parsed()) return cmd_predict(predict_args);
        if (report->parsed()) return cmd_report(report_args);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SemanticError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
