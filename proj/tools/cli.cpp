#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "taskseq/eval.hpp"
#include "taskseq/serialize.hpp"
#include "taskseq/server.hpp"

namespace taskseq::cli {

namespace {

struct Options {
    std::string corpus;
    std::string model;
    std::string out;
    std::uint64_t seed = 0;
    std::uint64_t generator_seed = GeneratorConfig{}.seed;
    double C = TrainConfig{}.C;
    double epsilon = TrainConfig{}.epsilon;
    int folds = 6;
    std::size_t k = 3;
    std::string scope = "first";
    std::vector<double> noise_probs{0.0, 0.1, 0.2, 0.3, 0.4};
    int port = 8080;
    std::string scenario;
};

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    return path.empty() || path == "-" ? std::string() : path + suffix;
}

CvConfig cv_config(const Options& o) {
    CvConfig c;
    c.train.C = o.C;
    c.train.epsilon = o.epsilon;
    c.folds = o.folds;
    c.seed = o.seed;
    return c;
}

nlohmann::json run_header(const Options& o, const std::vector<SequenceExample>& corpus, const CvConfig& c) {
    return {{"seed", o.seed},
            {"corpus_hash", corpus_hash(corpus)},
            {"sequences", corpus.size()},
            {"folds", c.folds},
            {"train", nlohmann::json::parse(c.train.to_json())}};
}

FeedbackPolicy policy_from(const Options& o) {
    FeedbackPolicy p;
    p.mode = FeedbackMode::OracleTopK;
    p.k = o.k;
    p.scope = o.scope == "all" ? FeedbackScope::AllSteps : FeedbackScope::FirstStep;
    return p;
}

const SequenceExample& find_scenario(const std::vector<SequenceExample>& corpus, const std::string& id) {
    for (const auto& ex : corpus)
        if (ex.scenario_id == id) return ex;
    throw LookupError("unknown scenario " + id);
}

nlohmann::json actions_json(const std::vector<Action>& actions) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : actions) a.push_back(to_json(x));
    return a;
}

// --- subcommands -------------------------------------------------------------

void cmd_generate(const Options& o, std::ostream& out) {
    GeneratorConfig g;
    g.seed = o.generator_seed;
    const auto corpus = generate_corpus(g);
    if (o.out.empty()) {
        for (const auto& ex : corpus) out << example_to_line(ex) << '\n';
    } else {
        save_corpus(corpus, o.out);
    }
}

void cmd_train(const Options& o, std::ostream& out) {
    const auto corpus = load_corpus(o.corpus);
    TrainConfig tc;
    tc.C = o.C;
    tc.epsilon = o.epsilon;
    tc.seed = o.seed;
    std::ostringstream log;
    const auto result = train(corpus, tc, [&](const IterationLog& l) { log << l.to_line() << '\n'; });
    log << "converged=" << (result.report.converged ? "true" : "false") << " iterations=" << result.report.iterations
        << " corpus_hash=" << corpus_hash(corpus) << '\n';
    save_model(o.out, {result.w, tc.to_json()});
    write_text(with_suffix(o.out, ".log"), log.str(), out);
    out << "wrote " << o.out << " (" << result.report.iterations << " iterations, "
        << (result.report.converged ? "converged" : "not converged") << ")\n";
}

void cmd_evaluate(const Options& o, std::ostream& out) {
    const auto corpus = load_corpus(o.corpus);
    const CvConfig c = cv_config(o);
    const MetricsReport svm = cross_validate(corpus, c);
    const MetricsReport multiclass = multiclass_baseline(corpus, c);
    const MetricsReport chance = chance_report(corpus, o.seed);
    nlohmann::json j = run_header(o, corpus, c);
    j["model"] = svm.to_json();
    j["baselines"] = {{"multiclass", multiclass.to_json()}, {"chance", chance.to_json()}};
    write_text(o.out, j.dump(2) + "\n", out);
    if (!o.out.empty()) write_text(with_suffix(o.out, ".predictions.jsonl"), svm.prediction_dump(), out);
}

void cmd_noise_sweep(const Options& o, std::ostream& out) {
    const auto corpus = load_corpus(o.corpus);
    const CvConfig c = cv_config(o);
    const auto models = train_folds(corpus, c);
    nlohmann::json j = run_header(o, corpus, c);
    j["noise_sweep"] = to_json(noise_sweep(corpus, models, c, o.noise_probs));
    write_text(o.out, j.dump(2) + "\n", out);
}

void cmd_feedback_eval(const Options& o, std::ostream& out) {
    const auto corpus = load_corpus(o.corpus);
    const CvConfig c = cv_config(o);
    const auto models = train_folds(corpus, c);
    const FeedbackPolicy policy = policy_from(o);
    const MetricsReport none = feedback_eval(corpus, models, c, {});
    const MetricsReport with = feedback_eval(corpus, models, c, policy);
    nlohmann::json j = run_header(o, corpus, c);
    j["feedback"] = {{"k", policy.k}, {"scope", o.scope}};
    j["sequence_accuracy_without"] = none.sequence_full;
    j["sequence_accuracy_with"] = with.sequence_full;
    j["report"] = with.to_json();
    write_text(o.out, j.dump(2) + "\n", out);
    if (!o.out.empty()) write_text(with_suffix(o.out, ".predictions.jsonl"), with.prediction_dump(), out);
}

void cmd_rollout(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    const auto corpus = load_corpus(o.corpus);
    const auto& ex = find_scenario(corpus, o.scenario);
    nlohmann::json j{{"scenario_id", ex.scenario_id}, {"task", to_json(ex.task)}, {"truth", actions_json(ex.steps)}};
    try {
        const auto r = rollout(model.weights, ex.initial_state, ex.task);
        j["predicted"] = actions_json(r.actions);
        j["reached_done"] = r.reached_done;
        j["goal_satisfied"] = task_goal_satisfied(r.final_state, ex.task);
    } catch (const RolloutAborted& e) {
        j["predicted"] = actions_json(e.partial());
        j["error"] = e.what();
    }
    write_text(o.out, j.dump(2) + "\n", out);
}

void cmd_chain(const Options& o, std::ostream& out, bool oracle) {
    const auto model = load_model(o.model);
    GeneratorConfig g;
    g.seed = o.generator_seed;
    auto recipes = generate_recipes(g);
    if (!o.scenario.empty()) {
        std::erase_if(recipes, [&](const RecipeScenario& r) { return r.name != o.scenario; });
        if (recipes.empty()) throw LookupError("unknown recipe scenario " + o.scenario);
    }
    FeedbackPolicy policy;
    if (oracle) policy = policy_from(o);
    const auto outcomes = run_recipes(recipes, model.weights, policy);
    std::size_t ok = 0;
    for (const auto& r : outcomes) ok += r.success ? 1 : 0;
    nlohmann::json j{{"seed", o.generator_seed}, {"oracle", oracle}, {"succeeded", ok}, {"total", outcomes.size()},
                     {"recipes", to_json(outcomes)}};
    write_text(o.out, j.dump(2) + "\n", out);
}

SessionServer* g_server = nullptr;

void cmd_serve(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    SessionManager sessions(model.weights, load_corpus(o.corpus));
    SessionServer server(sessions);
    const int port = server.bind("0.0.0.0", o.port);
    out << "listening on port " << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    server.listen();
    g_server = nullptr;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learned task sequencing over manipulation primitives"};
    app.require_subcommand(1);
    Options o;

    auto corpus_opt = [&](CLI::App* s) { return s->add_option("--corpus", o.corpus, "corpus file (JSONL)")->required(); };
    auto cv_opts = [&](CLI::App* s) {
        corpus_opt(s);
        s->add_option("--seed", o.seed, "fold / noise seed");
        s->add_option("--C", o.C, "SVM regularization");
        s->add_option("--epsilon", o.epsilon, "cutting-plane tolerance");
        s->add_option("--folds", o.folds, "cross-validation folds");
        s->add_option("--out", o.out, "report path (stdout when omitted)");
    };
    auto feedback_opts = [&](CLI::App* s) {
        s->add_option("--k", o.k, "proposals shown to the oracle")->check(CLI::PositiveNumber);
        s->add_option("--scope", o.scope, "feedback scope")->check(CLI::IsMember({"first", "all"}));
    };

    auto* gen = app.add_subcommand("generate", "generate the demonstration corpus");
    gen->add_option("--seed", o.generator_seed, "generator seed");
    gen->add_option("--out", o.out, "corpus path (stdout when omitted)");

    auto* tr = app.add_subcommand("train", "train a model on a corpus");
    corpus_opt(tr);
    tr->add_option("--C", o.C, "SVM regularization");
    tr->add_option("--epsilon", o.epsilon, "cutting-plane tolerance");
    tr->add_option("--seed", o.seed, "recorded in the model config");
    tr->add_option("--out", o.out, "model path; the log goes to <out>.log")->required();

    auto* ev = app.add_subcommand("evaluate", "cross-validated metrics with baselines");
    cv_opts(ev);

    auto* ns = app.add_subcommand("noise-sweep", "sequence accuracy under attribute noise");
    cv_opts(ns);
    ns->add_option("--noise-probs", o.noise_probs, "comma separated flip probabilities")->delimiter(',');

    auto* fb = app.add_subcommand("feedback-eval", "closed-loop accuracy with oracle feedback");
    cv_opts(fb);
    feedback_opts(fb);

    auto* ro = app.add_subcommand("rollout", "autonomous rollout of one corpus scenario");
    ro->add_option("--model", o.model, "model file")->required();
    corpus_opt(ro);
    ro->add_option("--scenario", o.scenario, "scenario id")->required();
    ro->add_option("--out", o.out, "output path (stdout when omitted)");

    auto* ch = app.add_subcommand("chain", "run the recipe scenarios");
    ch->add_option("--model", o.model, "model file")->required();
    ch->add_option("--seed", o.generator_seed, "generator seed for the recipe scenes");
    ch->add_option("--scenario", o.scenario, "run one recipe scenario by name");
    ch->add_option("--out", o.out, "output path (stdout when omitted)");
    bool oracle = false;
    ch->add_flag("--oracle", oracle, "oracle feedback with --k and --scope");
    feedback_opts(ch);

    auto* sv = app.add_subcommand("serve", "HTTP session service");
    sv->add_option("--model", o.model, "model file")->required();
    corpus_opt(sv);
    sv->add_option("--port", o.port, "listen port (0 picks one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << "run with --help for usage\n";
        return 2;
    }

    try {
        if (*gen) cmd_generate(o, out);
        else if (*tr) cmd_train(o, out);
        else if (*ev) cmd_evaluate(o, out);
        else if (*ns) cmd_noise_sweep(o, out);
        else if (*fb) cmd_feedback_eval(o, out);
        else if (*ro) cmd_rollout(o, out);
        else if (*ch) cmd_chain(o, out, oracle);
        else if (*sv) cmd_serve(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace taskseq::cli
